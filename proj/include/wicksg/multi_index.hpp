#ifndef WICKSG_MULTI_INDEX_HPP
#define WICKSG_MULTI_INDEX_HPP

#include <cstddef>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

namespace wicksg::chaos {

/// A multi-index alpha = (alpha_1, ..., alpha_M) of non-negative degrees.
class MultiIndex {
public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> entries);

  static MultiIndex zero(int m);
  static MultiIndex unit(int m, int k);

  int size() const { return static_cast<int>(entries_.size()); }
  int operator[](int k) const { return entries_[static_cast<std::size_t>(k)]; }
  const std::vector<int>& entries() const { return entries_; }

  int total_degree() const;

  /// alpha! as a double (exact for small degrees, log-gamma beyond).
  double factorial() const;

  /// Componentwise alpha_k <= beta_k for all k.
  bool leq(const MultiIndex& other) const;

  MultiIndex plus(const MultiIndex& other) const;
  /// Requires other.leq(*this).
  MultiIndex minus(const MultiIndex& other) const;
  /// Componentwise minimum (alpha wedge beta).
  MultiIndex min(const MultiIndex& other) const;

  bool operator==(const MultiIndex& other) const = default;

private:
  std::vector<int> entries_;
};

/// Product of per-coordinate binomial coefficients binom(a_k, b_k).
double binomial(const MultiIndex& a, const MultiIndex& b);

/// chi(a, b, k) = a! b! / (k! (a-k)! (b-k)!) over all coordinates.
double chi(const MultiIndex& a, const MultiIndex& b, const MultiIndex& k);

/// Graded lexicographic order: ascending total degree, lexicographic ties.
bool graded_lex_less(const MultiIndex& a, const MultiIndex& b);

/// The truncated set of all multi-indices of length M with total degree <= p,
/// sorted graded-lexicographically, together with the inverse position map.
class IndexSet {
public:
  static constexpr std::size_t kDefaultCardinalityCap = 200000;

  IndexSet(int m, int p, std::size_t cardinality_cap = kDefaultCardinalityCap);

  int dimension() const { return m_; }
  int max_degree() const { return p_; }
  int size() const { return static_cast<int>(members_.size()); }

  const MultiIndex& at(int i) const { return members_[static_cast<std::size_t>(i)]; }
  const std::vector<MultiIndex>& members() const { return members_; }

  /// Flat index of alpha; throws std::out_of_range if alpha is not a member.
  int position(const MultiIndex& alpha) const;
  /// Flat index of alpha, or -1 if absent.
  int find(const MultiIndex& alpha) const;

  double factorial(int i) const { return factorials_[static_cast<std::size_t>(i)]; }
  int degree(int i) const { return degrees_[static_cast<std::size_t>(i)]; }

  /// binomial(m + p, m), saturating instead of overflowing.
  static std::size_t cardinality(int m, int p);

private:
  int m_ = 0;
  int p_ = 0;
  std::vector<MultiIndex> members_;
  std::map<std::vector<int>, int> position_;
  std::vector<double> factorials_;
  std::vector<int> degrees_;
};

/// Convenience factory matching the construction used throughout.
std::shared_ptr<const IndexSet> build_index_set(int m, int p,
                                                std::size_t cap = IndexSet::kDefaultCardinalityCap);

} // namespace wicksg::chaos

#endif
