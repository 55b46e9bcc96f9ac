#include "wicksg/covariance.hpp"

#include <cmath>
#include <stdexcept>

namespace wicksg::rf {

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "exponential") return KernelKind::exponential;
  if (name == "bessel_matern") return KernelKind::bessel_matern;
  throw std::invalid_argument("unknown kernel kind: " + name);
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::exponential: return "exponential";
    case KernelKind::bessel_matern: return "bessel_matern";
  }
  throw std::invalid_argument("unknown kernel kind");
}

namespace {

double correlation_of_distance(const CovarianceKernel& k, double r) {
  switch (k.kind) {
    case KernelKind::gaussian:
      return std::exp(-r * r / (2.0 * k.correlation_length * k.correlation_length));
    case KernelKind::exponential:
      return std::exp(-r / k.correlation_length);
    case KernelKind::bessel_matern:
      // r K_1(r) -> 1 as r -> 0
      if (r < 1e-8) return 1.0;
      return r * std::cyl_bessel_k(1.0, r);
  }
  throw std::invalid_argument("unknown kernel kind");
}

} // namespace

double kernel_correlation(const CovarianceKernel& kernel, const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) {
  if (kernel.correlation_length <= 0.0) throw std::invalid_argument("kernel: correlation length must be positive");
  return correlation_of_distance(kernel, (x1 - x2).norm());
}

double kernel_eval(const CovarianceKernel& kernel, const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) {
  const double c = kernel_correlation(kernel, x1, x2);
  return kernel.kind == KernelKind::bessel_matern ? kernel.sigma * kernel.sigma * c : c;
}

Eigen::MatrixXd correlation_matrix(const CovarianceKernel& kernel, const Eigen::MatrixXd& pts1,
                                   const Eigen::MatrixXd& pts2) {
  Eigen::MatrixXd out(pts1.rows(), pts2.rows());
  for (Eigen::Index i = 0; i < pts1.rows(); ++i) {
    for (Eigen::Index j = 0; j < pts2.rows(); ++j) {
      const double r = (pts1.row(i) - pts2.row(j)).norm();
      out(i, j) = correlation_of_distance(kernel, r);
    }
  }
  return out;
}

} // namespace wicksg::rf
