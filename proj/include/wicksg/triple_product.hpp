#ifndef WICKSG_TRIPLE_PRODUCT_HPP
#define WICKSG_TRIPLE_PRODUCT_HPP

#include "wicksg/multi_index.hpp"

#include <Eigen/SparseCore>

#include <memory>
#include <vector>

namespace wicksg::chaos {

/// E[He_a He_b He_c] as a product of one-dimensional factors.
double triple_product(const MultiIndex& a, const MultiIndex& b, const MultiIndex& c);

/// Sparse tensor of triple expectations E[He_{alpha(a)} He_{beta(i)} He_{gamma(j)}],
/// with beta, gamma drawn from `basis` and alpha from `coeff_basis`. Entries are
/// grouped per coefficient index a, which is exactly the layout needed for the
/// C_alpha chaos matrices of the tensor-form Galerkin operator.
class TripleProductTensor {
public:
  TripleProductTensor(std::shared_ptr<const IndexSet> basis,
                      std::shared_ptr<const IndexSet> coeff_basis);

  const IndexSet& basis() const { return *basis_; }
  const IndexSet& coeff_basis() const { return *coeff_basis_; }

  /// Triplets (i, j, value) of the matrix C_{alpha(a)}.
  const std::vector<Eigen::Triplet<double>>& coefficient_slice(int a) const {
    return slices_[static_cast<std::size_t>(a)];
  }

  /// C_{alpha(a)} assembled as a sparse matrix over `basis`.
  Eigen::SparseMatrix<double> coefficient_matrix(int a) const;

  /// Tensor entry; zero when any index is outside its set.
  double entry(int a, int i, int j) const;

  std::size_t nonzeros() const;

private:
  std::shared_ptr<const IndexSet> basis_;
  std::shared_ptr<const IndexSet> coeff_basis_;
  std::vector<std::vector<Eigen::Triplet<double>>> slices_;
};

/// Shared, once-per-(basis, coeff_basis) cache of triple-product tensors.
/// Construction is single-threaded; the returned object is immutable.
std::shared_ptr<const TripleProductTensor> triple_product_cache(std::shared_ptr<const IndexSet> basis,
                                                                std::shared_ptr<const IndexSet> coeff_basis);

} // namespace wicksg::chaos

#endif
