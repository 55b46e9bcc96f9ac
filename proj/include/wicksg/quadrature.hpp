#ifndef WICKSG_QUADRATURE_HPP
#define WICKSG_QUADRATURE_HPP

#include <Eigen/Dense>

#include <utility>

namespace wicksg {

/// Gauss-Legendre rule on [-1, 1] (Golub-Welsch).
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n);

/// Gauss-Hermite rule for the standard Gaussian weight e^{-x^2/2}/sqrt(2 pi);
/// integrates polynomials of degree 2n-1 exactly, total mass one.
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite(int n);

} // namespace wicksg

#endif
