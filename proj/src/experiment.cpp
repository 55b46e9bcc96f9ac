#include "wicksg/experiment.hpp"

#include "wicksg/fem.hpp"
#include "wicksg/kl.hpp"
#include "wicksg/lognormal.hpp"
#include "wicksg/montecarlo.hpp"
#include "wicksg/operators.hpp"
#include "wicksg/solvers.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace wicksg::cli {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
  // shortest representation that round-trips
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
T get_or(const json& j, const std::string& key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

std::string csv_escape(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

} // namespace

const std::vector<std::string>& list_experiments() {
  static const std::vector<std::string> kinds = {"model_compare", "perturbation_study", "mc_variance_reduction",
                                                 "precond_table", "powell_bessel_table"};
  return kinds;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.experiment = get_or<std::string>(j, "experiment", cfg.experiment);
  cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  if (j.contains("domain")) {
    const json& d = j.at("domain");
    cfg.domain.dim = get_or<int>(d, "dim", cfg.domain.dim);
    cfg.domain.lower = get_or<std::vector<double>>(d, "lower", cfg.domain.lower);
    cfg.domain.upper = get_or<std::vector<double>>(d, "upper", cfg.domain.upper);
  }
  if (j.contains("mesh")) {
    const json& m = j.at("mesh");
    cfg.mesh.n = get_or<std::vector<int>>(m, "n", cfg.mesh.n);
    cfg.mesh.order = get_or<int>(m, "order", cfg.mesh.order);
  }
  if (j.contains("kernel")) {
    const json& k = j.at("kernel");
    cfg.kernel.kind = get_or<std::string>(k, "kind", cfg.kernel.kind);
    cfg.kernel.correlation_length = get_or<double>(k, "correlation_length", cfg.kernel.correlation_length);
    cfg.kernel.sigma = get_or<double>(k, "sigma", cfg.kernel.sigma);
  }
  if (j.contains("kl")) {
    const json& k = j.at("kl");
    cfg.kl.tol = get_or<double>(k, "tol", cfg.kl.tol);
    cfg.kl.m = get_or<int>(k, "m", cfg.kl.m);
    cfg.kl.grid_cells = get_or<int>(k, "grid_cells", cfg.kl.grid_cells);
    cfg.kl.grid_points = get_or<int>(k, "grid_points", cfg.kl.grid_points);
    cfg.kl.method = get_or<std::string>(k, "method", cfg.kl.method);
    cfg.kl.cache_dir = get_or<std::string>(k, "cache_dir", cfg.kl.cache_dir);
  }
  if (j.contains("chaos")) {
    cfg.chaos.p = get_or<int>(j.at("chaos"), "p", cfg.chaos.p);
    cfg.chaos.moment_form = get_or<std::string>(j.at("chaos"), "moment_form", cfg.chaos.moment_form);
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    cfg.solver.method = get_or<std::string>(s, "method", cfg.solver.method);
    cfg.solver.tol = get_or<double>(s, "tol", cfg.solver.tol);
    cfg.solver.max_iter = get_or<int>(s, "max_iter", cfg.solver.max_iter);
    cfg.solver.gmres_max_iter = get_or<int>(s, "gmres_max_iter", cfg.solver.gmres_max_iter);
    cfg.solver.gamma = get_or<double>(s, "gamma", cfg.solver.gamma);
    cfg.solver.restart = get_or<int>(s, "restart", cfg.solver.restart);
    cfg.solver.initial = get_or<std::string>(s, "initial", cfg.solver.initial);
    cfg.solver.residual = get_or<std::string>(s, "residual", cfg.solver.residual);
  }
  if (j.contains("mc")) {
    const json& m = j.at("mc");
    cfg.mc.n_samples = get_or<int>(m, "n_samples", cfg.mc.n_samples);
    cfg.mc.cv_alpha = get_or<double>(m, "cv_alpha", cfg.mc.cv_alpha);
  }
  cfg.force = get_or<std::string>(j, "force", cfg.force);
  auto parse_rows = [](const json& arr) {
    std::vector<TableRow> rows;
    for (const json& r : arr) {
      TableRow row;
      row.correlation_length = get_or<double>(r, "correlation_length", row.correlation_length);
      row.sigma = get_or<double>(r, "sigma", row.sigma);
      row.m = get_or<int>(r, "m", row.m);
      row.p = get_or<int>(r, "p", row.p);
      rows.push_back(row);
    }
    return rows;
  };
  if (j.contains("rows")) cfg.rows = parse_rows(j.at("rows"));
  if (j.contains("vr_points")) cfg.vr_points = parse_rows(j.at("vr_points"));
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    cfg.grid.sigma = get_or<std::vector<double>>(g, "sigma", cfg.grid.sigma);
    cfg.grid.p = get_or<std::vector<int>>(g, "p", cfg.grid.p);
  }
  if (j.contains("perturbation")) {
    const json& p = j.at("perturbation");
    cfg.perturbation.epsilon = get_or<std::vector<double>>(p, "epsilon", cfg.perturbation.epsilon);
    cfg.perturbation.sigma = get_or<std::vector<double>>(p, "sigma", cfg.perturbation.sigma);
    cfg.perturbation.phi = get_or<std::string>(p, "phi", cfg.perturbation.phi);
  }
  return cfg;
}

json ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["output_dir"] = output_dir;
  j["seed"] = seed;
  j["domain"] = {{"dim", domain.dim}, {"lower", domain.lower}, {"upper", domain.upper}};
  j["mesh"] = {{"n", mesh.n}, {"order", mesh.order}};
  j["kernel"] = {{"kind", kernel.kind},
                 {"correlation_length", kernel.correlation_length},
                 {"sigma", kernel.sigma}};
  j["kl"] = {{"tol", kl.tol},       {"m", kl.m},           {"grid_cells", kl.grid_cells},
             {"grid_points", kl.grid_points}, {"method", kl.method}, {"cache_dir", kl.cache_dir}};
  j["chaos"] = {{"p", chaos.p}, {"moment_form", chaos.moment_form}};
  j["solver"] = {{"method", solver.method}, {"tol", solver.tol},
                 {"max_iter", solver.max_iter}, {"gmres_max_iter", solver.gmres_max_iter},
                 {"gamma", solver.gamma},       {"restart", solver.restart},
                 {"initial", solver.initial},   {"residual", solver.residual}};
  j["mc"] = {{"n_samples", mc.n_samples}, {"cv_alpha", mc.cv_alpha}};
  j["force"] = force;
  auto rows_json = [](const std::vector<TableRow>& rows) {
    json arr = json::array();
    for (const TableRow& r : rows)
      arr.push_back({{"correlation_length", r.correlation_length}, {"sigma", r.sigma}, {"m", r.m}, {"p", r.p}});
    return arr;
  };
  if (!rows.empty()) j["rows"] = rows_json(rows);
  if (!vr_points.empty()) j["vr_points"] = rows_json(vr_points);
  if (experiment == "powell_bessel_table") j["grid"] = {{"sigma", grid.sigma}, {"p", grid.p}};
  if (experiment == "perturbation_study")
    j["perturbation"] = {{"epsilon", perturbation.epsilon}, {"sigma", perturbation.sigma}, {"phi", perturbation.phi}};
  return j;
}

void ExperimentConfig::validate() const {
  const auto& kinds = list_experiments();
  if (std::find(kinds.begin(), kinds.end(), experiment) == kinds.end())
    throw std::invalid_argument("unknown experiment kind: " + experiment);
  if (domain.dim != 1 && domain.dim != 2) throw std::invalid_argument("domain.dim must be 1 or 2");
  if (domain.lower.size() != static_cast<std::size_t>(domain.dim) ||
      domain.upper.size() != static_cast<std::size_t>(domain.dim))
    throw std::invalid_argument("domain bounds must match the dimension");
  for (int c = 0; c < domain.dim; ++c) {
    if (domain.upper[static_cast<std::size_t>(c)] <= domain.lower[static_cast<std::size_t>(c)])
      throw std::invalid_argument("domain must have positive extent");
  }
  if (mesh.n.empty() || mesh.n.size() > 2) throw std::invalid_argument("mesh.n must have 1 or 2 entries");
  for (int n : mesh.n)
    if (n < 1) throw std::invalid_argument("mesh.n entries must be positive");
  if (mesh.order < 1 || mesh.order > (domain.dim == 1 ? 4 : 2))
    throw std::invalid_argument("mesh.order out of range for the dimension");
  rf::kernel_kind_from_string(kernel.kind);
  if (kernel.correlation_length <= 0.0) throw std::invalid_argument("kernel.correlation_length must be positive");
  if (kernel.sigma < 0.0) throw std::invalid_argument("kernel.sigma must be non-negative");
  if (kl.m < 0 || (kl.m == 0 && !(kl.tol > 0.0)))
    throw std::invalid_argument("kl needs a fixed m or a positive tol");
  if (kl.grid_cells < 1 || kl.grid_points < 1) throw std::invalid_argument("kl grid must be positive");
  if (kl.method != "auto" && kl.method != "numeric" && kl.method != "analytic")
    throw std::invalid_argument("kl.method must be auto, numeric or analytic");
  if (chaos.p < 0) throw std::invalid_argument("chaos.p must be non-negative");
  if (chaos.moment_form != "truncated_field" && chaos.moment_form != "full_field")
    throw std::invalid_argument("chaos.moment_form must be truncated_field or full_field");
  if (solver.method != "gmres" && solver.method != "richardson" && solver.method != "gauss_seidel")
    throw std::invalid_argument("solver.method must be gmres, richardson or gauss_seidel");
  if (!(solver.tol > 0.0)) throw std::invalid_argument("solver.tol must be positive");
  if (solver.max_iter < 1 || solver.gmres_max_iter < 1) throw std::invalid_argument("solver iteration caps must be positive");
  if (solver.initial != "model2" && solver.initial != "zero")
    throw std::invalid_argument("solver.initial must be model2 or zero");
  if (solver.residual != "preconditioned" && solver.residual != "plain")
    throw std::invalid_argument("solver.residual must be preconditioned or plain");
  if (mc.n_samples < 2) throw std::invalid_argument("mc.n_samples must be at least 2");
  if (force != "product_exp" && force != "one")
    throw std::invalid_argument("force must be product_exp or one");
  if (experiment == "precond_table" && rows.empty()) throw std::invalid_argument("precond_table needs rows");
  if (experiment == "mc_variance_reduction" && vr_points.empty())
    throw std::invalid_argument("mc_variance_reduction needs vr_points");
  if (experiment == "powell_bessel_table" && (grid.sigma.empty() || grid.p.empty()))
    throw std::invalid_argument("powell_bessel_table needs a sigma x p grid");
  if (experiment == "perturbation_study") {
    if (domain.dim != 1) throw std::invalid_argument("perturbation_study is one-dimensional");
    if (perturbation.epsilon.empty() || perturbation.sigma.empty())
      throw std::invalid_argument("perturbation_study needs epsilon and sigma lists");
    if (perturbation.phi != "linear" && perturbation.phi != "sine")
      throw std::invalid_argument("perturbation.phi must be linear or sine");
  }
}

namespace {

fem::FemSpace make_space(const ExperimentConfig& cfg) {
  if (cfg.domain.dim == 1)
    return fem::FemSpace::interval(cfg.domain.lower[0], cfg.domain.upper[0], cfg.mesh.n[0], cfg.mesh.order);
  const int ny = cfg.mesh.n.size() > 1 ? cfg.mesh.n[1] : cfg.mesh.n[0];
  return fem::FemSpace::rectangle(Eigen::Vector2d(cfg.domain.lower[0], cfg.domain.lower[1]),
                                  Eigen::Vector2d(cfg.domain.upper[0], cfg.domain.upper[1]), cfg.mesh.n[0], ny,
                                  cfg.mesh.order);
}

Eigen::VectorXd make_load(const ExperimentConfig& cfg, const fem::FemSpace& space) {
  if (cfg.force == "one") return fem::assemble_load(space, Eigen::VectorXd::Ones(space.quad_weights().size()));
  return fem::assemble_load(space, [](const Eigen::VectorXd& x) {
    double f = 1.0;
    for (Eigen::Index c = 0; c < x.size(); ++c) f *= (x[c] * x[c] + 4.0 * x[c] + 1.0) * std::exp(x[c]);
    return f;
  });
}

std::shared_ptr<const rf::KlBasis> make_kl(const ExperimentConfig& cfg, double correlation_length, int m_override) {
  const rf::CovarianceKernel kernel{rf::kernel_kind_from_string(cfg.kernel.kind), correlation_length,
                                    cfg.kernel.sigma};
  const rf::Truncation trunc = (m_override > 0)   ? rf::Truncation::fixed(m_override)
                               : (cfg.kl.m > 0)   ? rf::Truncation::fixed(cfg.kl.m)
                                                  : rf::Truncation::captured_variance(cfg.kl.tol);
  const bool analytic = (cfg.kl.method == "analytic") ||
                        (cfg.kl.method == "auto" && cfg.domain.dim == 1 &&
                         kernel.kind == rf::KernelKind::exponential);
  std::string cache_path;
  if (!cfg.kl.cache_dir.empty()) {
    std::ostringstream name;
    name << "kl_" << cfg.kernel.kind << "_lc" << correlation_length << "_d" << cfg.domain.dim << "_g"
         << cfg.kl.grid_cells << "x" << cfg.kl.grid_points << "_";
    if (trunc.rule == rf::Truncation::Rule::fixed)
      name << "m" << trunc.m;
    else
      name << "tol" << trunc.tol;
    name << (analytic ? "_analytic" : "_numeric") << ".kl";
    cache_path = (std::filesystem::path(cfg.kl.cache_dir) / name.str()).string();
    if (std::filesystem::exists(cache_path))
      return std::make_shared<rf::KlBasis>(rf::KlBasis::load(cache_path));
  }
  rf::KlBasis basis = [&] {
    if (analytic) {
      if (cfg.domain.dim != 1 || kernel.kind != rf::KernelKind::exponential)
        throw std::invalid_argument("analytic K-L is available for the 1D exponential kernel only");
      const rf::Truncation t = (trunc.rule == rf::Truncation::Rule::captured_variance)
                                   ? rf::Truncation::eigenvalue_ratio(trunc.tol)
                                   : trunc;
      return rf::kl_exponential_1d(correlation_length, cfg.domain.lower[0], cfg.domain.upper[0], t);
    }
    const rf::KlGrid grid =
        cfg.domain.dim == 1
            ? rf::kl_grid_interval(cfg.domain.lower[0], cfg.domain.upper[0], cfg.kl.grid_cells, cfg.kl.grid_points)
            : rf::kl_grid_rectangle(Eigen::Vector2d(cfg.domain.lower[0], cfg.domain.lower[1]),
                                    Eigen::Vector2d(cfg.domain.upper[0], cfg.domain.upper[1]), cfg.kl.grid_cells,
                                    cfg.kl.grid_cells, cfg.kl.grid_points);
    return rf::kl_numeric(kernel, grid, trunc);
  }();
  if (!cache_path.empty()) {
    std::filesystem::create_directories(cfg.kl.cache_dir);
    basis.save(cache_path);
  }
  return std::make_shared<rf::KlBasis>(std::move(basis));
}

rf::MomentForm moment_form(const ExperimentConfig& cfg) {
  return cfg.chaos.moment_form == "full_field" ? rf::MomentForm::full_field : rf::MomentForm::truncated_field;
}

sg::SolverOptions solver_options(const SolverConfig& s) {
  sg::SolverOptions o;
  o.tol = s.tol;
  o.max_iter = s.max_iter;
  o.gamma = s.gamma;
  o.restart = s.restart;
  o.initial = s.initial == "zero" ? sg::SolverOptions::Initial::zero : sg::SolverOptions::Initial::model2;
  o.residual = s.residual == "plain" ? sg::SolverOptions::ResidualNorm::plain
                                     : sg::SolverOptions::ResidualNorm::preconditioned;
  return o;
}

struct RowCounts {
  int n_modes = 0, m = 0;
  int gs = 0, rich = 0, gmres = 0;
  bool gs_censored = false, rich_censored = false, gmres_censored = false;
};

RowCounts run_table_row(const ExperimentConfig& cfg, const fem::FemSpace& space, const Eigen::VectorXd& load,
                        double correlation_length, double sigma, int m, int p, bool with_gs) {
  const auto kl = make_kl(cfg, correlation_length, m);
  const rf::LognormalCoefficient a(kl, sigma);
  auto basis = chaos::build_index_set(kl->modes(), p);
  const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis, moment_form(cfg));
  const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
  sg::SolverOptions opts = solver_options(cfg.solver);
  RowCounts out;
  out.m = kl->modes();
  out.n_modes = basis->size();
  if (with_gs) {
    const sg::SolveReport gs = sg::block_gauss_seidel(op, load, opts);
    out.gs = gs.iterations;
    out.gs_censored = !gs.converged;
  }
  const sg::SolveReport rich = sg::richardson_preconditioned(op, prop, load, opts);
  out.rich = rich.iterations;
  out.rich_censored = !rich.converged;
  sg::SolverOptions gopts = opts;
  gopts.max_iter = cfg.solver.gmres_max_iter;
  const sg::SolveReport gm = sg::gmres_preconditioned(op, prop, load, gopts);
  out.gmres = gm.iterations;
  out.gmres_censored = !gm.converged;
  return out;
}

sg::SolveReport solve_coupled(const ExperimentConfig& cfg, const sg::ModelOneOperator& op,
                              const sg::TriangularPropagator& prop, const Eigen::VectorXd& load) {
  sg::SolverOptions opts = solver_options(cfg.solver);
  if (cfg.solver.method == "gauss_seidel") return sg::block_gauss_seidel(op, load, opts);
  if (cfg.solver.method == "richardson") return sg::richardson_preconditioned(op, prop, load, opts);
  opts.max_iter = cfg.solver.gmres_max_iter;
  return sg::gmres_preconditioned(op, prop, load, opts);
}

std::string run_precond_table(const ExperimentConfig& cfg, const fem::FemSpace& space,
                              const Eigen::VectorXd& load) {
  std::ostringstream csv;
  csv << "correlation_length,sigma,m,p,n_modes,n_gs,gs_censored,n_richardson,richardson_censored,n_gmres,"
         "gmres_censored,error\n";
  for (const TableRow& row : cfg.rows) {
    csv << fmt(row.correlation_length) << "," << fmt(row.sigma) << ",";
    try {
      const RowCounts c = run_table_row(cfg, space, load, row.correlation_length, row.sigma, row.m, row.p, true);
      csv << c.m << "," << row.p << "," << c.n_modes << "," << c.gs << "," << (c.gs_censored ? 1 : 0) << ","
          << c.rich << "," << (c.rich_censored ? 1 : 0) << "," << c.gmres << "," << (c.gmres_censored ? 1 : 0)
          << ",\n";
    } catch (const std::exception& err) {
      csv << row.m << "," << row.p << ",0,0,0,0,0,0,0," << csv_escape(err.what()) << "\n";
    }
  }
  return csv.str();
}

std::string run_powell_bessel_table(const ExperimentConfig& cfg, const fem::FemSpace& space,
                                    const Eigen::VectorXd& load) {
  std::ostringstream csv;
  csv << "sigma,p,n_richardson,richardson_censored,n_gmres,gmres_censored,error\n";
  for (double sigma : cfg.grid.sigma) {
    for (int p : cfg.grid.p) {
      csv << fmt(sigma) << "," << p << ",";
      try {
        const RowCounts c =
            run_table_row(cfg, space, load, cfg.kernel.correlation_length, sigma, cfg.kl.m, p, false);
        csv << c.rich << "," << (c.rich_censored ? 1 : 0) << "," << c.gmres << "," << (c.gmres_censored ? 1 : 0)
            << ",\n";
      } catch (const std::exception& err) {
        csv << "0,0,0,0," << csv_escape(err.what()) << "\n";
      }
    }
  }
  return csv.str();
}

std::string run_model_compare(const ExperimentConfig& cfg, const fem::FemSpace& space, const Eigen::VectorXd& load) {
  const auto kl = make_kl(cfg, cfg.kernel.correlation_length, 0);
  const double sigma = cfg.kernel.sigma;
  const rf::LognormalCoefficient a(kl, sigma);
  auto basis = chaos::build_index_set(kl->modes(), cfg.chaos.p);
  const auto u2 = sg::solve_model2(space, a.wick_inverse(), basis, load);
  const Eigen::VectorXd mean2 = chaos_mean(u2);
  const Eigen::VectorXd std2 = chaos_variance(u2).cwiseSqrt();

  Eigen::VectorXd mean1, std1;
  if (kl->modes() <= 20) {
    const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis, moment_form(cfg));
    const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
    const sg::SolveReport rep = solve_coupled(cfg, op, prop, load);
    if (!rep.converged) throw std::runtime_error("model_compare: the coupled solve did not converge");
    mean1 = chaos_mean(rep.solution);
    std1 = chaos_variance(rep.solution).cwiseSqrt();
  } else {
    mc::McConfig mcfg{cfg.mc.n_samples, cfg.seed, cfg.mc.cv_alpha};
    const mc::McEstimate est = mc::mc_plain(space, a, load, mcfg);
    mean1 = est.mean;
    std1 = est.variance.cwiseSqrt();
  }

  const auto l_m1 = fem::line_restriction(space, mean1);
  const auto l_m2 = fem::line_restriction(space, mean2);
  const auto l_s1 = fem::line_restriction(space, std1);
  const auto l_s2 = fem::line_restriction(space, std2);
  std::ostringstream csv;
  csv << "x,mean_I,mean_II,std_I,std_II\n";
  for (std::size_t i = 0; i < l_m1.size(); ++i) {
    csv << fmt(l_m1[i].first) << "," << fmt(l_m1[i].second) << "," << fmt(l_m2[i].second) << ","
        << fmt(l_s1[i].second) << "," << fmt(l_s2[i].second) << "\n";
  }
  return csv.str();
}

std::string run_perturbation_study(const ExperimentConfig& cfg, const fem::FemSpace& space,
                                   const Eigen::VectorXd& load) {
  std::function<double(double)> phi;
  if (cfg.perturbation.phi == "linear") phi = [](double x) { return x; };
  else phi = [](double x) { return std::sin(M_PI * x); };
  auto basis = chaos::build_index_set(1, cfg.chaos.p);
  std::ostringstream csv;
  csv << "epsilon,sigma,eps_r,error\n";
  for (double eps : cfg.perturbation.epsilon) {
    for (double sigma : cfg.perturbation.sigma) {
      csv << fmt(eps) << "," << fmt(sigma) << ",";
      try {
        const rf::PerturbedCoefficient coeff(sigma, eps, phi);
        const rf::CoefficientData data = coeff.evaluate_on(space.quad_points());
        const sg::ModelOneOperator op(space, data, basis);
        const sg::TriangularPropagator prop(space, data, basis);
        const sg::SolveReport rep = solve_coupled(cfg, op, prop, load);
        if (!rep.converged) throw std::runtime_error("coupled solve did not converge");
        const Eigen::MatrixXd u1 = sg::expansion_to_block(rep.solution);
        const Eigen::MatrixXd u2 = prop.solve(sg::load_block(load, basis->size()));
        const auto diff = sg::block_to_expansion(u1 - u2, basis);
        const double eps_r = fem::chaos_h1_norm(space, diff) / fem::chaos_h1_norm(space, rep.solution);
        csv << fmt(eps_r) << ",\n";
      } catch (const std::exception& err) {
        csv << "nan," << csv_escape(err.what()) << "\n";
      }
    }
  }
  return csv.str();
}

std::string run_mc_variance_reduction(const ExperimentConfig& cfg, const fem::FemSpace& space,
                                      const Eigen::VectorXd& load) {
  std::ostringstream csv;
  csv << "correlation_length,sigma,m,p,n_modes,int_var_plain,int_var_cv,ratio_l2,h1_var_plain,h1_var_cv,"
         "ratio_h1,estimator_variance_cv,error\n";
  for (const TableRow& pt : cfg.vr_points) {
    csv << fmt(pt.correlation_length) << "," << fmt(pt.sigma) << ",";
    try {
      const auto kl = make_kl(cfg, pt.correlation_length, pt.m);
      const rf::LognormalCoefficient a(kl, pt.sigma);
      auto basis = chaos::build_index_set(kl->modes(), pt.p);
      const auto u2 = sg::solve_model2(space, a.wick_inverse(), basis, load);
      mc::McConfig mcfg{cfg.mc.n_samples, cfg.seed, cfg.mc.cv_alpha};
      const mc::McEstimate plain = mc::mc_plain(space, a, load, mcfg);
      const mc::McEstimate cv = mc::mc_control_variate(space, a, u2, load, mcfg);
      const mc::VarianceReductionReport rep = mc::variance_reduction_report(space, plain, cv);
      csv << kl->modes() << "," << pt.p << "," << basis->size() << "," << fmt(rep.int_var_plain) << ","
          << fmt(rep.int_var_cv) << "," << fmt(rep.ratio_l2) << "," << fmt(rep.h1_var_plain) << ","
          << fmt(rep.h1_var_cv) << "," << fmt(rep.ratio_h1) << "," << fmt(rep.estimator_variance_cv) << ",\n";
    } catch (const std::exception& err) {
      csv << pt.m << "," << pt.p << ",0,nan,nan,nan,nan,nan,nan,nan," << csv_escape(err.what()) << "\n";
    }
  }
  return csv.str();
}

} // namespace

ExperimentConfig validate_config(const json& json_in) {
  const json& body = json_in.contains("config") ? json_in.at("config") : json_in;
  ExperimentConfig cfg = ExperimentConfig::from_json(body);
  cfg.validate();
  return cfg;
}

RunResult run_experiment(const json& json_in, std::string output_root) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = validate_config(json_in);
  if (output_root.empty()) {
    if (const char* env = std::getenv("WICKSG_OUTPUT_ROOT")) output_root = env;
    else output_root = ".";
  }
  const std::filesystem::path dir = std::filesystem::path(output_root) / cfg.output_dir;
  std::filesystem::create_directories(dir);

  const fem::FemSpace space = make_space(cfg);
  const Eigen::VectorXd load = make_load(cfg, space);

  std::string csv;
  std::string csv_name = cfg.experiment + ".csv";
  if (cfg.experiment == "precond_table") csv = run_precond_table(cfg, space, load);
  else if (cfg.experiment == "powell_bessel_table") csv = run_powell_bessel_table(cfg, space, load);
  else if (cfg.experiment == "model_compare") csv = run_model_compare(cfg, space, load);
  else if (cfg.experiment == "perturbation_study") csv = run_perturbation_study(cfg, space, load);
  else if (cfg.experiment == "mc_variance_reduction") csv = run_mc_variance_reduction(cfg, space, load);
  else throw std::invalid_argument("unknown experiment kind: " + cfg.experiment);

  RunResult result;
  const std::filesystem::path csv_path = dir / csv_name;
  write_text_atomic(csv_path, csv);
  result.outputs.push_back(csv_path.string());
  result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json manifest;
  manifest["wicksg_manifest"] = 1;
  manifest["config"] = cfg.to_json();
  manifest["versions"] = {{"wicksg", kVersion},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)}};
  manifest["seed"] = cfg.seed;
  manifest["wall_time_s"] = result.wall_time_s;
  manifest["outputs"] = result.outputs;
  const std::filesystem::path man_path = dir / "manifest.json";
  write_text_atomic(man_path, manifest.dump(2) + "\n");
  result.outputs.push_back(man_path.string());
  return result;
}

} // namespace wicksg::cli
