#ifndef WICKSG_KL_HPP
#define WICKSG_KL_HPP

#include "wicksg/covariance.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace wicksg::rf {

/// Quadrature grid used to discretize the covariance eigenproblem.
struct KlGrid {
  Eigen::MatrixXd points;  ///< n x d
  Eigen::VectorXd weights; ///< n
};

KlGrid kl_grid_interval(double a, double b, int cells, int points_per_cell = 2);
KlGrid kl_grid_rectangle(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi, int cells_x, int cells_y,
                         int points_per_cell = 2);

/// Mode-count selection: either a fixed M or a tolerance with a policy.
struct Truncation {
  enum class Rule {
    fixed,            ///< keep exactly m modes
    captured_variance,///< smallest M with tail variance fraction <= tol
    eigenvalue_ratio  ///< smallest M with lambda_{M+1}/lambda_1 <= tol
  };
  Rule rule = Rule::fixed;
  int m = 1;
  double tol = 0.0;

  static Truncation fixed(int m);
  static Truncation captured_variance(double tol);
  static Truncation eigenvalue_ratio(double tol);
};

/// Retained eigenpairs (lambda_i, phi_i) of a covariance kernel, with the
/// eigenfunctions evaluable anywhere in the domain.
class KlBasis {
public:
  enum class Kind { nystrom, analytic_exponential, constant };

  int modes() const { return static_cast<int>(eigenvalues_.size()); }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const CovarianceKernel& kernel() const { return kernel_; }
  const KlGrid& grid() const { return grid_; }
  Kind kind() const { return kind_; }

  /// phi_i(x) for the retained modes; rows follow `pts`, columns the modes.
  Eigen::MatrixXd eigenfunctions_at(const Eigen::MatrixXd& pts) const;

  /// max over pts of |sum_i lambda_i phi_i(x)^2 - K(x,x)| with K the
  /// correlation form (unit diagonal); reports the truncation quality.
  double completeness_defect(const Eigen::MatrixXd& pts) const;

  /// max over mode pairs of |int phi_i phi_j - delta_ij| under the grid rule.
  double orthonormality_defect() const;

  /// sum of retained eigenvalues (bounded by the domain measure).
  double captured_variance() const { return eigenvalues_.sum(); }

  /// Transcendental roots of the analytic exponential basis (empty otherwise).
  const std::vector<double>& exponential_roots() const { return roots_; }

  void save(const std::string& path) const;
  static KlBasis load(const std::string& path);

  static KlBasis nystrom(CovarianceKernel kernel, KlGrid grid, Eigen::VectorXd eigenvalues,
                         Eigen::MatrixXd values_at_grid);
  static KlBasis analytic_exponential(double l_c, double a, double b, std::vector<double> roots,
                                      Eigen::VectorXd eigenvalues);
  static KlBasis constant(double measure);

private:
  Kind kind_ = Kind::nystrom;
  CovarianceKernel kernel_{};
  KlGrid grid_{};
  Eigen::VectorXd eigenvalues_{};
  Eigen::MatrixXd values_at_grid_{}; ///< n_grid x M, orthonormal under grid weights
  // analytic exponential data
  double interval_a_ = 0.0, interval_b_ = 1.0;
  std::vector<double> roots_{}; ///< transcendental roots w_i on the unit interval
  double measure_ = 1.0;        ///< domain measure for the constant basis
};

/// Nystrom (quadrature-collocation) eigensolve of the correlation kernel on
/// the given grid, symmetrized by W^{1/2} K W^{1/2}. Negative eigenvalues
/// below -1e-12 lambda_1 are rejected; tiny negatives clamp to zero.
KlBasis kl_numeric(const CovarianceKernel& kernel, const KlGrid& grid, const Truncation& trunc);

/// Closed-form eigenpairs of the exponential kernel on an interval [a, b]:
/// roots w of (w^2 - eps^2) tan w = 2 eps w with eps = (b-a)/l_c on the unit
/// interval, lambda = 2 eps / (w^2 + eps^2), rescaled to [a, b].
KlBasis kl_exponential_1d(double l_c, double a, double b, const Truncation& trunc);

/// Single-mode basis with sqrt(lambda_1) phi_1 identically one; the
/// correlation-length -> infinity limit on a domain of the given measure.
KlBasis kl_constant(double measure);

/// Residual of the analytic transcendental equation at w (diagnostic).
double exponential_root_residual(double w, double eps);

} // namespace wicksg::rf

#endif
