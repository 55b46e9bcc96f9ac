#include "wicksg/triple_product.hpp"

#include "wicksg/hermite.hpp"

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace wicksg::chaos {

double triple_product(const MultiIndex& a, const MultiIndex& b, const MultiIndex& c) {
  if (a.size() != b.size() || a.size() != c.size())
    throw std::invalid_argument("triple_product: length mismatch");
  double v = 1.0;
  for (int k = 0; k < a.size(); ++k) {
    v *= hermite_triple_expectation(a[k], b[k], c[k]);
    if (v == 0.0) return 0.0;
  }
  return v;
}

namespace {

// Enumerate kappa <= bound recursively, calling f(kappa).
template <class F>
void for_each_leq(const MultiIndex& bound, std::vector<int>& cur, std::size_t k, F&& f) {
  if (k == cur.size()) {
    f(cur);
    return;
  }
  for (int v = 0; v <= bound[static_cast<int>(k)]; ++v) {
    cur[k] = v;
    for_each_leq(bound, cur, k + 1, f);
  }
}

} // namespace

TripleProductTensor::TripleProductTensor(std::shared_ptr<const IndexSet> basis,
                                         std::shared_ptr<const IndexSet> coeff_basis)
    : basis_(std::move(basis)), coeff_basis_(std::move(coeff_basis)) {
  if (basis_->dimension() != coeff_basis_->dimension())
    throw std::invalid_argument("TripleProductTensor: dimension mismatch");
  const IndexSet& bs = *basis_;
  const IndexSet& cs = *coeff_basis_;
  slices_.resize(static_cast<std::size_t>(cs.size()));
  // For every pair (beta, gamma) walk kappa <= beta ^ gamma; the only alpha with
  // E[He_alpha He_beta He_gamma] != 0 are alpha = beta + gamma - 2 kappa.
  std::vector<int> cur(static_cast<std::size_t>(bs.dimension()), 0);
  for (int i = 0; i < bs.size(); ++i) {
    for (int j = i; j < bs.size(); ++j) {
      const MultiIndex& beta = bs.at(i);
      const MultiIndex& gamma = bs.at(j);
      const MultiIndex bound = beta.min(gamma);
      for_each_leq(bound, cur, 0, [&](const std::vector<int>& kv) {
        MultiIndex kappa(kv);
        MultiIndex alpha = beta.plus(gamma).minus(kappa).minus(kappa);
        if (alpha.total_degree() > cs.max_degree()) return;
        const int a = cs.find(alpha);
        if (a < 0) return;
        const double value = chi(beta, gamma, kappa) * alpha.factorial();
        slices_[static_cast<std::size_t>(a)].emplace_back(i, j, value);
        if (j != i) slices_[static_cast<std::size_t>(a)].emplace_back(j, i, value);
      });
    }
  }
}

Eigen::SparseMatrix<double> TripleProductTensor::coefficient_matrix(int a) const {
  Eigen::SparseMatrix<double> c(basis_->size(), basis_->size());
  const auto& s = coefficient_slice(a);
  c.setFromTriplets(s.begin(), s.end());
  return c;
}

double TripleProductTensor::entry(int a, int i, int j) const {
  if (a < 0 || a >= coeff_basis_->size() || i < 0 || i >= basis_->size() || j < 0 || j >= basis_->size())
    return 0.0;
  return triple_product(coeff_basis_->at(a), basis_->at(i), basis_->at(j));
}

std::size_t TripleProductTensor::nonzeros() const {
  std::size_t n = 0;
  for (const auto& s : slices_) n += s.size();
  return n;
}

std::shared_ptr<const TripleProductTensor> triple_product_cache(std::shared_ptr<const IndexSet> basis,
                                                                std::shared_ptr<const IndexSet> coeff_basis) {
  using Key = std::tuple<int, int, int, int>;
  static std::map<Key, std::weak_ptr<const TripleProductTensor>> cache;
  static std::mutex mutex;
  const Key key{basis->dimension(), basis->max_degree(), coeff_basis->dimension(), coeff_basis->max_degree()};
  std::lock_guard<std::mutex> lock(mutex);
  if (auto hit = cache[key].lock()) return hit;
  auto built = std::make_shared<const TripleProductTensor>(std::move(basis), std::move(coeff_basis));
  cache[key] = built;
  return built;
}

} // namespace wicksg::chaos
