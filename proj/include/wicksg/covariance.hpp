#ifndef WICKSG_COVARIANCE_HPP
#define WICKSG_COVARIANCE_HPP

#include <Eigen/Dense>

#include <string>

namespace wicksg::rf {

enum class KernelKind { gaussian, exponential, bessel_matern };

KernelKind kernel_kind_from_string(const std::string& name);
std::string to_string(KernelKind kind);

/// Stationary covariance kernel of the underlying Gaussian field.
/// gaussian and exponential are normalized (K(x,x) = 1); bessel_matern is
/// sigma^2 r K_1(r) with unit value reached as r -> 0.
struct CovarianceKernel {
  KernelKind kind = KernelKind::gaussian;
  double correlation_length = 1.0;
  double sigma = 1.0;
};

/// Kernel value at a pair of points (rows of length d).
double kernel_eval(const CovarianceKernel& kernel, const Eigen::VectorXd& x1, const Eigen::VectorXd& x2);

/// The correlation form K / K(x,x): equals kernel_eval for the normalized
/// kinds and r K_1(r) for bessel_matern. Eigendecompositions act on this.
double kernel_correlation(const CovarianceKernel& kernel, const Eigen::VectorXd& x1, const Eigen::VectorXd& x2);

/// Correlation matrix between two point sets (rows are points).
Eigen::MatrixXd correlation_matrix(const CovarianceKernel& kernel, const Eigen::MatrixXd& pts1,
                                   const Eigen::MatrixXd& pts2);

} // namespace wicksg::rf

#endif
