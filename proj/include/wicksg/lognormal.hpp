#ifndef WICKSG_LOGNORMAL_HPP
#define WICKSG_LOGNORMAL_HPP

#include "wicksg/chaos_expansion.hpp"
#include "wicksg/kl.hpp"
#include "wicksg/multi_index.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>

namespace wicksg::rf {

/// Coefficient evaluated on a point set in the amplitude form
///   a(x, xi)    = exp(psi(x)^T xi - sigma^2/2),
///   a_alpha(x)  = chaos_prefactor(x) psi(x)^alpha / alpha!,
///   what_delta(x) = wick_prefactor(x) psi(x)^delta / delta!
/// (the chaos coefficients of a and of its Wick inverse). All stochastic
/// Galerkin assembly consumes this representation.
struct CoefficientData {
  Eigen::MatrixXd psi;             ///< n x M
  Eigen::VectorXd chaos_prefactor; ///< n
  Eigen::VectorXd wick_prefactor;  ///< n
  double sigma = 0.0;

  int modes() const { return static_cast<int>(psi.cols()); }
};

/// Second-moment convention for the coupled-model assembly. The full-field
/// form is the closed Wiener-chaos formula for the untruncated log-normal
/// process; the truncated-field form takes expectations of the sampled
/// coefficient exp(psi^T xi - sigma^2/2) itself, which multiplies the moments
/// by e^{(|psi(x)|^2 - sigma^2)/2}. They coincide when the retained modes
/// carry the full variance.
enum class MomentForm { full_field, truncated_field };

/// Log-normal coefficient a = exp(sigma G - sigma^2/2) over a truncated K-L
/// basis, optionally carrying the Wick-inverse scaling e^{-sigma^2}.
class LognormalCoefficient {
public:
  LognormalCoefficient(std::shared_ptr<const KlBasis> kl, double sigma, bool wick_inverse_scaled = false);

  const KlBasis& kl() const { return *kl_; }
  std::shared_ptr<const KlBasis> kl_ptr() const { return kl_; }
  double sigma() const { return sigma_; }
  bool wick_inverse_scaled() const { return wick_inverse_scaled_; }

  LognormalCoefficient wick_inverse() const { return {kl_, sigma_, true}; }

  /// Amplitude rows psi(x) = (sigma sqrt(lambda_i) phi_i(x))_i.
  Eigen::MatrixXd amplitude_at(const Eigen::MatrixXd& pts) const;

  CoefficientData evaluate_on(const Eigen::MatrixXd& pts, MomentForm form = MomentForm::full_field) const;

  /// Pointwise sample a(x; xi); requires the unscaled coefficient.
  Eigen::VectorXd sample(const Eigen::MatrixXd& pts, const Eigen::VectorXd& xi) const;

  /// E[a He_a He_b](x) = sum_{kappa <= a ^ b} chi(a,b,kappa) psi^{a+b-2 kappa},
  /// times e^{-sigma^2} when the coefficient is Wick-inverse scaled.
  double exact_second_moment(const chaos::MultiIndex& a, const chaos::MultiIndex& b,
                             const Eigen::VectorXd& x) const;

  /// Chaos expansion of the coefficient as fields on `pts`.
  chaos::ChaosExpansion<Eigen::VectorXd> chaos_on(const Eigen::MatrixXd& pts,
                                                  std::shared_ptr<const chaos::IndexSet> basis) const;

private:
  std::shared_ptr<const KlBasis> kl_;
  double sigma_;
  bool wick_inverse_scaled_;
};

/// Spatially perturbed single-variable coefficient
///   a(x, xi) = exp(sigma (1 + epsilon phi(x)) xi - sigma^2/2).
/// Chaos coefficients follow from the generating function with site-dependent
/// amplitude s(x) = sigma (1 + epsilon phi(x)).
class PerturbedCoefficient {
public:
  PerturbedCoefficient(double sigma, double epsilon, std::function<double(double)> phi);

  double sigma() const { return sigma_; }
  double epsilon() const { return epsilon_; }

  CoefficientData evaluate_on(const Eigen::MatrixXd& pts) const;
  Eigen::VectorXd sample(const Eigen::MatrixXd& pts, const Eigen::VectorXd& xi) const;
  chaos::ChaosExpansion<Eigen::VectorXd> chaos_on(const Eigen::MatrixXd& pts,
                                                  std::shared_ptr<const chaos::IndexSet> basis) const;

private:
  double sigma_;
  double epsilon_;
  std::function<double(double)> phi_;
};

/// E[a He_a He_b] for a coefficient given by one amplitude row and prefactor.
double exact_second_moment(const Eigen::VectorXd& psi_row, double prefactor, const chaos::MultiIndex& a,
                           const chaos::MultiIndex& b);

/// Chaos coefficients prefactor * psi^alpha / alpha! as fields over `pts`.
chaos::ChaosExpansion<Eigen::VectorXd> coefficient_chaos(const CoefficientData& data, bool wick_inverse,
                                                         std::shared_ptr<const chaos::IndexSet> basis);

} // namespace wicksg::rf

#endif
