#include "wicksg/chaos_expansion.hpp"

namespace wicksg::chaos {

ChaosExpansion<double> wick_product(const ChaosExpansion<double>& x, const ChaosExpansion<double>& y,
                                    std::shared_ptr<const IndexSet> target) {
  x.check();
  y.check();
  if (x.basis->dimension() != y.basis->dimension())
    throw std::invalid_argument("wick_product: dimension mismatch");
  if (x.normalization != y.normalization)
    throw std::invalid_argument("wick_product: mixed normalizations");
  const Normalization out_norm = x.normalization;
  const ChaosExpansion<double> xu = with_normalization(x, Normalization::he_unnormalized);
  const ChaosExpansion<double> yu = with_normalization(y, Normalization::he_unnormalized);
  if (!target) {
    target = build_index_set(x.basis->dimension(), x.basis->max_degree() + y.basis->max_degree());
  }
  ChaosExpansion<double> z;
  z.basis = target;
  z.coeff.assign(static_cast<std::size_t>(target->size()), 0.0);
  for (int i = 0; i < xu.size(); ++i) {
    if (xu.coeff[static_cast<std::size_t>(i)] == 0.0) continue;
    for (int j = 0; j < yu.size(); ++j) {
      if (yu.coeff[static_cast<std::size_t>(j)] == 0.0) continue;
      const MultiIndex gamma = xu.basis->at(i).plus(yu.basis->at(j));
      if (gamma.total_degree() > target->max_degree()) continue;
      const int g = target->find(gamma);
      if (g < 0) continue;
      z.coeff[static_cast<std::size_t>(g)] += xu.coeff[static_cast<std::size_t>(i)] * yu.coeff[static_cast<std::size_t>(j)];
    }
  }
  return with_normalization(z, out_norm);
}

ChaosExpansion<double> wick_exponential(double s, int k, std::shared_ptr<const IndexSet> basis) {
  ChaosExpansion<double> e;
  e.basis = std::move(basis);
  e.coeff.assign(static_cast<std::size_t>(e.basis->size()), 0.0);
  for (int i = 0; i < e.basis->size(); ++i) {
    const MultiIndex& a = e.basis->at(i);
    bool pure = true;
    for (int c = 0; c < a.size(); ++c) {
      if (c != k && a[c] != 0) {
        pure = false;
        break;
      }
    }
    if (!pure) continue;
    const int n = a[k];
    e.coeff[static_cast<std::size_t>(i)] = std::pow(s, n) / factorial(n);
  }
  return e;
}

} // namespace wicksg::chaos
