#include "wicksg/multi_index.hpp"

#include "wicksg/hermite.hpp"

#include <algorithm>
#include <limits>

namespace wicksg::chaos {

MultiIndex::MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
  for (int e : entries_) {
    if (e < 0) throw std::invalid_argument("MultiIndex: negative entry");
  }
}

MultiIndex MultiIndex::zero(int m) { return MultiIndex(std::vector<int>(static_cast<std::size_t>(m), 0)); }

MultiIndex MultiIndex::unit(int m, int k) {
  std::vector<int> e(static_cast<std::size_t>(m), 0);
  e.at(static_cast<std::size_t>(k)) = 1;
  return MultiIndex(std::move(e));
}

int MultiIndex::total_degree() const {
  int d = 0;
  for (int e : entries_) d += e;
  return d;
}

double MultiIndex::factorial() const {
  double f = 1.0;
  for (int e : entries_) f *= chaos::factorial(e);
  return f;
}

bool MultiIndex::leq(const MultiIndex& other) const {
  if (size() != other.size()) throw std::invalid_argument("MultiIndex: length mismatch");
  for (int k = 0; k < size(); ++k) {
    if ((*this)[k] > other[k]) return false;
  }
  return true;
}

MultiIndex MultiIndex::plus(const MultiIndex& other) const {
  if (size() != other.size()) throw std::invalid_argument("MultiIndex: length mismatch");
  std::vector<int> e(entries_);
  for (int k = 0; k < size(); ++k) e[static_cast<std::size_t>(k)] += other[k];
  return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::minus(const MultiIndex& other) const {
  if (!other.leq(*this)) throw std::invalid_argument("MultiIndex: subtraction would go negative");
  std::vector<int> e(entries_);
  for (int k = 0; k < size(); ++k) e[static_cast<std::size_t>(k)] -= other[k];
  return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::min(const MultiIndex& other) const {
  if (size() != other.size()) throw std::invalid_argument("MultiIndex: length mismatch");
  std::vector<int> e(entries_);
  for (int k = 0; k < size(); ++k) e[static_cast<std::size_t>(k)] = std::min(e[static_cast<std::size_t>(k)], other[k]);
  return MultiIndex(std::move(e));
}

double binomial(const MultiIndex& a, const MultiIndex& b) {
  if (a.size() != b.size()) throw std::invalid_argument("binomial: length mismatch");
  double v = 1.0;
  for (int k = 0; k < a.size(); ++k) v *= binomial(a[k], b[k]);
  return v;
}

double chi(const MultiIndex& a, const MultiIndex& b, const MultiIndex& k) {
  if (a.size() != b.size() || a.size() != k.size()) throw std::invalid_argument("chi: length mismatch");
  double v = 1.0;
  for (int c = 0; c < a.size(); ++c) v *= chi(a[c], b[c], k[c]);
  return v;
}

bool graded_lex_less(const MultiIndex& a, const MultiIndex& b) {
  const int da = a.total_degree(), db = b.total_degree();
  if (da != db) return da < db;
  return a.entries() < b.entries();
}

namespace {

void enumerate_degree(int m, int deg, std::vector<int>& prefix, std::vector<MultiIndex>& out) {
  if (static_cast<int>(prefix.size()) == m - 1) {
    prefix.push_back(deg);
    out.emplace_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int v = 0; v <= deg; ++v) {
    prefix.push_back(v);
    enumerate_degree(m, deg - v, prefix, out);
    prefix.pop_back();
  }
}

} // namespace

std::size_t IndexSet::cardinality(int m, int p) {
  // binomial(m + p, min(m, p)) with saturation
  const int k = std::min(m, p);
  std::size_t result = 1;
  for (int i = 1; i <= k; ++i) {
    const std::size_t num = static_cast<std::size_t>(m + p - k + i);
    if (result > std::numeric_limits<std::size_t>::max() / num) return std::numeric_limits<std::size_t>::max();
    result = result * num / static_cast<std::size_t>(i);
  }
  return result;
}

IndexSet::IndexSet(int m, int p, std::size_t cardinality_cap) : m_(m), p_(p) {
  if (m < 1) throw std::invalid_argument("IndexSet: dimension must be >= 1");
  if (p < 0) throw std::invalid_argument("IndexSet: max degree must be >= 0");
  const std::size_t n = cardinality(m, p);
  if (n > cardinality_cap) {
    throw std::invalid_argument("IndexSet: cardinality " + std::to_string(n) +
                                " exceeds cap " + std::to_string(cardinality_cap));
  }
  members_.reserve(n);
  std::vector<int> prefix;
  for (int deg = 0; deg <= p; ++deg) {
    std::vector<MultiIndex> level;
    enumerate_degree(m, deg, prefix, level);
    std::sort(level.begin(), level.end(),
              [](const MultiIndex& a, const MultiIndex& b) { return a.entries() < b.entries(); });
    for (auto& a : level) members_.push_back(std::move(a));
  }
  factorials_.reserve(members_.size());
  degrees_.reserve(members_.size());
  for (std::size_t i = 0; i < members_.size(); ++i) {
    position_.emplace(members_[i].entries(), static_cast<int>(i));
    factorials_.push_back(members_[i].factorial());
    degrees_.push_back(members_[i].total_degree());
  }
}

int IndexSet::position(const MultiIndex& alpha) const {
  const int i = find(alpha);
  if (i < 0) throw std::out_of_range("IndexSet: index not a member");
  return i;
}

int IndexSet::find(const MultiIndex& alpha) const {
  auto it = position_.find(alpha.entries());
  return it == position_.end() ? -1 : it->second;
}

std::shared_ptr<const IndexSet> build_index_set(int m, int p, std::size_t cap) {
  return std::make_shared<const IndexSet>(m, p, cap);
}

} // namespace wicksg::chaos
