#include "wicksg/lognormal.hpp"

#include <cmath>
#include <stdexcept>

namespace wicksg::rf {

using chaos::ChaosExpansion;
using chaos::IndexSet;
using chaos::MultiIndex;

LognormalCoefficient::LognormalCoefficient(std::shared_ptr<const KlBasis> kl, double sigma,
                                           bool wick_inverse_scaled)
    : kl_(std::move(kl)), sigma_(sigma), wick_inverse_scaled_(wick_inverse_scaled) {
  if (!kl_) throw std::invalid_argument("LognormalCoefficient: missing K-L basis");
  if (sigma_ < 0.0) throw std::invalid_argument("LognormalCoefficient: negative sigma");
}

Eigen::MatrixXd LognormalCoefficient::amplitude_at(const Eigen::MatrixXd& pts) const {
  Eigen::MatrixXd phi = kl_->eigenfunctions_at(pts);
  for (int i = 0; i < kl_->modes(); ++i) phi.col(i) *= sigma_ * std::sqrt(kl_->eigenvalues()[i]);
  return phi;
}

CoefficientData LognormalCoefficient::evaluate_on(const Eigen::MatrixXd& pts, MomentForm form) const {
  CoefficientData data;
  data.psi = amplitude_at(pts);
  if (form == MomentForm::truncated_field) {
    data.chaos_prefactor = (0.5 * (data.psi.rowwise().squaredNorm().array() - sigma_ * sigma_)).exp();
  } else {
    data.chaos_prefactor = Eigen::VectorXd::Ones(pts.rows());
  }
  data.wick_prefactor = Eigen::VectorXd::Constant(pts.rows(), std::exp(-sigma_ * sigma_));
  data.sigma = sigma_;
  return data;
}

Eigen::VectorXd LognormalCoefficient::sample(const Eigen::MatrixXd& pts, const Eigen::VectorXd& xi) const {
  if (wick_inverse_scaled_)
    throw std::logic_error("sample: pointwise sampling targets the unscaled coefficient a");
  if (xi.size() != kl_->modes()) throw std::invalid_argument("sample: xi length must match retained modes");
  const Eigen::MatrixXd psi = amplitude_at(pts);
  return ((psi * xi).array() - 0.5 * sigma_ * sigma_).exp();
}

double exact_second_moment(const Eigen::VectorXd& psi_row, double prefactor, const MultiIndex& a,
                           const MultiIndex& b) {
  if (a.size() != b.size()) throw std::invalid_argument("exact_second_moment: length mismatch");
  if (a.size() > psi_row.size())
    throw std::invalid_argument("exact_second_moment: index dimension exceeds amplitude modes");
  const MultiIndex bound = a.min(b);
  // walk kappa <= a ^ b
  std::vector<int> kappa(static_cast<std::size_t>(a.size()), 0);
  double sum = 0.0;
  for (;;) {
    double term = 1.0;
    for (int k = 0; k < a.size(); ++k) {
      term *= chaos::chi(a[k], b[k], kappa[static_cast<std::size_t>(k)]);
      const int e = a[k] + b[k] - 2 * kappa[static_cast<std::size_t>(k)];
      if (e > 0) term *= std::pow(psi_row[k], e);
    }
    sum += term;
    int c = 0;
    while (c < a.size()) {
      if (kappa[static_cast<std::size_t>(c)] < bound[c]) {
        ++kappa[static_cast<std::size_t>(c)];
        break;
      }
      kappa[static_cast<std::size_t>(c)] = 0;
      ++c;
    }
    if (c == a.size()) break;
  }
  return prefactor * sum;
}

double LognormalCoefficient::exact_second_moment(const MultiIndex& a, const MultiIndex& b,
                                                 const Eigen::VectorXd& x) const {
  Eigen::MatrixXd pt(1, x.size());
  pt.row(0) = x.transpose();
  const Eigen::MatrixXd psi = amplitude_at(pt);
  const double scale = wick_inverse_scaled_ ? std::exp(-sigma_ * sigma_) : 1.0;
  return rf::exact_second_moment(psi.row(0), scale, a, b);
}

ChaosExpansion<Eigen::VectorXd> coefficient_chaos(const CoefficientData& data, bool wick_inverse,
                                                  std::shared_ptr<const IndexSet> basis) {
  if (basis->dimension() > data.modes())
    throw std::invalid_argument("coefficient_chaos: index dimension exceeds retained modes");
  const Eigen::VectorXd& pref = wick_inverse ? data.wick_prefactor : data.chaos_prefactor;
  ChaosExpansion<Eigen::VectorXd> out;
  out.basis = basis;
  out.coeff.reserve(static_cast<std::size_t>(basis->size()));
  for (int i = 0; i < basis->size(); ++i) {
    const MultiIndex& alpha = basis->at(i);
    Eigen::VectorXd field = pref / basis->factorial(i);
    for (int k = 0; k < alpha.size(); ++k) {
      for (int rep = 0; rep < alpha[k]; ++rep) field = field.cwiseProduct(data.psi.col(k));
    }
    out.coeff.push_back(std::move(field));
  }
  return out;
}

ChaosExpansion<Eigen::VectorXd> LognormalCoefficient::chaos_on(const Eigen::MatrixXd& pts,
                                                               std::shared_ptr<const IndexSet> basis) const {
  return coefficient_chaos(evaluate_on(pts), wick_inverse_scaled_, std::move(basis));
}

PerturbedCoefficient::PerturbedCoefficient(double sigma, double epsilon, std::function<double(double)> phi)
    : sigma_(sigma), epsilon_(epsilon), phi_(std::move(phi)) {
  if (sigma_ < 0.0) throw std::invalid_argument("PerturbedCoefficient: negative sigma");
  if (!phi_) throw std::invalid_argument("PerturbedCoefficient: missing profile");
}

CoefficientData PerturbedCoefficient::evaluate_on(const Eigen::MatrixXd& pts) const {
  if (pts.cols() != 1) throw std::invalid_argument("PerturbedCoefficient: one-dimensional domains only");
  CoefficientData data;
  data.psi.resize(pts.rows(), 1);
  data.chaos_prefactor.resize(pts.rows());
  data.wick_prefactor.resize(pts.rows());
  data.sigma = sigma_;
  for (Eigen::Index r = 0; r < pts.rows(); ++r) {
    const double s = sigma_ * (1.0 + epsilon_ * phi_(pts(r, 0)));
    data.psi(r, 0) = s;
    data.chaos_prefactor[r] = std::exp(0.5 * (s * s - sigma_ * sigma_));
    // The companion Wick-type model keeps the constant e^{-sigma^2} scaling of
    // the unperturbed coefficient; the relative model gap then scales like
    // epsilon sigma^2. (The algebraically exact Wick inverse would carry
    // e^{-(s^2+sigma^2)/2} instead and shrink the gap to epsilon^2 sigma^2.)
    data.wick_prefactor[r] = std::exp(-sigma_ * sigma_) * data.chaos_prefactor[r];
  }
  return data;
}

Eigen::VectorXd PerturbedCoefficient::sample(const Eigen::MatrixXd& pts, const Eigen::VectorXd& xi) const {
  if (xi.size() != 1) throw std::invalid_argument("PerturbedCoefficient: single random dimension");
  const CoefficientData data = evaluate_on(pts);
  return ((data.psi.col(0) * xi[0]).array() - 0.5 * sigma_ * sigma_).exp();
}

ChaosExpansion<Eigen::VectorXd> PerturbedCoefficient::chaos_on(const Eigen::MatrixXd& pts,
                                                               std::shared_ptr<const IndexSet> basis) const {
  return coefficient_chaos(evaluate_on(pts), false, std::move(basis));
}

} // namespace wicksg::rf
