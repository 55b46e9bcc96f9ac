#ifndef WICKSG_EXPERIMENT_HPP
#define WICKSG_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace wicksg::cli {

struct DomainConfig {
  int dim = 1;
  std::vector<double> lower{-1.0};
  std::vector<double> upper{1.0};
};

struct MeshConfig {
  std::vector<int> n{25};
  int order = 4;
};

struct KernelConfig {
  std::string kind = "gaussian";
  double correlation_length = 1.0;
  double sigma = 0.2;
};

struct KlConfig {
  double tol = 0.0;          ///< captured-variance tolerance (numeric eigensolve)
  int m = 0;                 ///< fixed mode count; overrides tol when positive
  int grid_cells = 50;       ///< Nystrom grid cells per direction
  int grid_points = 2;       ///< Gauss points per grid cell
  std::string method = "auto"; ///< auto | numeric | analytic
  std::string cache_dir;     ///< optional on-disk eigensolve cache
};

struct ChaosConfig {
  int p = 3;
  /// Second-moment convention for the coupled model: "truncated_field"
  /// matches the reference computations, "full_field" is the closed formula
  /// for the untruncated process.
  std::string moment_form = "truncated_field";
};

struct SolverConfig {
  std::string method = "gmres"; ///< coupled-model solver: gmres | richardson | gauss_seidel
  double tol = 1e-3;
  int max_iter = 100;
  int gmres_max_iter = 200;
  double gamma = 0.0; ///< <= 0 selects 1/(1+3 sigma^2)
  int restart = 0;    ///< <= 0 keeps the full Krylov basis
  std::string initial = "model2";        ///< model2 | zero
  std::string residual = "preconditioned"; ///< preconditioned | plain (Richardson)
};

struct McSettings {
  int n_samples = 10000;
  double cv_alpha = 1.0;
};

struct TableRow {
  double correlation_length = 1.0;
  double sigma = 0.2;
  int m = 0; ///< 0 defers to the K-L tolerance rule
  int p = 3;
};

struct PerturbationConfig {
  std::vector<double> epsilon{0.05, 0.1, 0.2};
  std::vector<double> sigma{0.1, 0.2, 0.4};
  std::string phi = "linear"; ///< linear | sine
};

struct SigmaPGrid {
  std::vector<double> sigma{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<int> p{1, 2, 3, 4, 5};
};

struct ExperimentConfig {
  std::string experiment = "model_compare";
  std::string output_dir = "out";
  std::uint64_t seed = 20180816;
  DomainConfig domain;
  MeshConfig mesh;
  KernelConfig kernel;
  KlConfig kl;
  ChaosConfig chaos;
  SolverConfig solver;
  McSettings mc;
  std::string force = "product_exp"; ///< product_exp | one
  std::vector<TableRow> rows;          ///< precond_table
  SigmaPGrid grid;                     ///< powell_bessel_table
  PerturbationConfig perturbation;     ///< perturbation_study
  std::vector<TableRow> vr_points;     ///< mc_variance_reduction

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

const std::vector<std::string>& list_experiments();

struct RunResult {
  std::vector<std::string> outputs; ///< files written, manifest last
  double wall_time_s = 0.0;
};

/// Executes the experiment, writing CSV outputs and a manifest under
/// output_root/output_dir. `json_in` may be a plain config or a previously
/// written manifest (the embedded config is used). Empty output_root falls
/// back to $WICKSG_OUTPUT_ROOT, then the working directory.
RunResult run_experiment(const nlohmann::json& json_in, std::string output_root = "");

/// Parse and validate without computing.
ExperimentConfig validate_config(const nlohmann::json& json_in);

} // namespace wicksg::cli

#endif
