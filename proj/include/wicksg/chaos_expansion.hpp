#ifndef WICKSG_CHAOS_EXPANSION_HPP
#define WICKSG_CHAOS_EXPANSION_HPP

#include "wicksg/hermite.hpp"
#include "wicksg/multi_index.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

namespace wicksg::chaos {

enum class Normalization {
  he_unnormalized, ///< coefficients of He_alpha (canonical storage)
  orthonormal      ///< coefficients of he_alpha = He_alpha / sqrt(alpha!)
};

namespace detail {
inline double zero_like(double) { return 0.0; }
inline Eigen::VectorXd zero_like(const Eigen::VectorXd& v) { return Eigen::VectorXd::Zero(v.size()); }
inline double square_reduce(double v) { return v * v; }
inline Eigen::VectorXd square_reduce(const Eigen::VectorXd& v) { return v.cwiseProduct(v); }
} // namespace detail

/// Coefficients of a random element over the Hermite basis indexed by a
/// truncated set J_{M,p}. T is double for scalar elements or Eigen::VectorXd
/// for finite-element fields.
template <class T>
struct ChaosExpansion {
  std::shared_ptr<const IndexSet> basis;
  std::vector<T> coeff;
  Normalization normalization = Normalization::he_unnormalized;

  int size() const { return static_cast<int>(coeff.size()); }

  void check() const {
    if (!basis) throw std::invalid_argument("ChaosExpansion: missing basis");
    if (static_cast<int>(coeff.size()) != basis->size())
      throw std::invalid_argument("ChaosExpansion: coefficient count mismatch");
  }
};

/// Switch between He and he coefficient conventions (an involution).
template <class T>
ChaosExpansion<T> with_normalization(const ChaosExpansion<T>& x, Normalization target) {
  x.check();
  if (x.normalization == target) return x;
  ChaosExpansion<T> out = x;
  out.normalization = target;
  for (int i = 0; i < x.size(); ++i) {
    const double s = std::sqrt(x.basis->factorial(i));
    // he coefficient = He coefficient * sqrt(alpha!)
    out.coeff[static_cast<std::size_t>(i)] =
        (target == Normalization::orthonormal) ? x.coeff[static_cast<std::size_t>(i)] * s
                                               : x.coeff[static_cast<std::size_t>(i)] * (1.0 / s);
  }
  return out;
}

/// Pointwise evaluation sum_alpha c_alpha He_alpha(xi) (basis per normalization).
template <class T>
T chaos_eval(const ChaosExpansion<T>& x, const Eigen::VectorXd& xi) {
  x.check();
  const IndexSet& set = *x.basis;
  if (xi.size() != set.dimension()) throw std::invalid_argument("chaos_eval: sample length mismatch");
  // per-dimension He values up to p
  std::vector<std::vector<double>> he(static_cast<std::size_t>(set.dimension()));
  for (int k = 0; k < set.dimension(); ++k) he[static_cast<std::size_t>(k)] = hermite_eval_upto(set.max_degree(), xi[k]);
  T acc = detail::zero_like(x.coeff.front());
  for (int i = 0; i < set.size(); ++i) {
    const MultiIndex& a = set.at(i);
    double w = 1.0;
    for (int k = 0; k < a.size(); ++k) {
      if (a[k] > 0) w *= he[static_cast<std::size_t>(k)][static_cast<std::size_t>(a[k])];
    }
    if (x.normalization == Normalization::orthonormal) w /= std::sqrt(set.factorial(i));
    acc += w * x.coeff[static_cast<std::size_t>(i)];
  }
  return acc;
}

/// E[x] = coefficient of the zero index (He_0 = he_0 = 1).
template <class T>
T chaos_mean(const ChaosExpansion<T>& x) {
  x.check();
  return x.coeff.front();
}

/// Var[x] = sum over nonzero indices of the orthonormal coefficient squared
/// (componentwise for fields).
template <class T>
T chaos_variance(const ChaosExpansion<T>& x) {
  x.check();
  T acc = detail::zero_like(x.coeff.front());
  for (int i = 1; i < x.size(); ++i) {
    const double w = (x.normalization == Normalization::orthonormal) ? 1.0 : x.basis->factorial(i);
    acc += w * detail::square_reduce(x.coeff[static_cast<std::size_t>(i)]);
  }
  return acc;
}

/// Wick product: on He coefficients the additive convolution
/// z_gamma = sum_{alpha+beta=gamma} x_alpha y_beta. The output basis truncates
/// at degree p_x + p_y unless a target set is supplied.
ChaosExpansion<double> wick_product(const ChaosExpansion<double>& x, const ChaosExpansion<double>& y,
                                    std::shared_ptr<const IndexSet> target = nullptr);

/// Scalar expansion of the Wick exponential exp^{diamond}(s xi_k):
/// He coefficients s^n / n! on the given basis.
ChaosExpansion<double> wick_exponential(double s, int k, std::shared_ptr<const IndexSet> basis);

} // namespace wicksg::chaos

#endif
