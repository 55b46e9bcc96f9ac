#ifndef WICKSG_OPERATORS_HPP
#define WICKSG_OPERATORS_HPP

#include "wicksg/fem.hpp"
#include "wicksg/lognormal.hpp"
#include "wicksg/multi_index.hpp"
#include "wicksg/triple_product.hpp"

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace wicksg::sg {

/// All componentwise-ordered pairs (lo <= hi) of an index set, grouped by hi,
/// with the weights that turn monomial tables into the orthonormal-frame
/// stochastic blocks:
///   sym_weight = binom(hi, lo) sqrt(lo!/hi!)   (Gram factor of E[a He He])
///   tri_weight = sqrt(hi!/lo!) / (hi - lo)!    (lower-triangular Wick blocks)
struct PairTable {
  struct Entry {
    int hi, lo, diff;
    double sym_weight, tri_weight;
  };
  std::vector<Entry> entries;  ///< sorted by hi
  std::vector<int> row_begin;  ///< size N+1

  static PairTable build(const chaos::IndexSet& set);
};

/// mono(q, i) = psi(x_q)^{alpha(i)} for every member of the set.
Eigen::MatrixXd monomial_table(const chaos::IndexSet& set, const Eigen::MatrixXd& psi);

/// A linear operator on block coefficient matrices (modes x dofs), acting in
/// the orthonormal chaos frame.
class BlockOperator {
public:
  virtual ~BlockOperator() = default;
  virtual Eigen::MatrixXd apply(const Eigen::MatrixXd& u) const = 0;
  virtual std::shared_ptr<const chaos::IndexSet> basis_ptr() const = 0;
  virtual int n_dof() const = 0;
  const chaos::IndexSet& basis() const { return *basis_ptr(); }
  int modes() const { return basis().size(); }
};

/// Exact Model-I uncertainty propagator: block (gamma, alpha) carries
/// int E[a He_alpha He_gamma] grad grad, evaluated pointwise through the
/// closed-form second moments and never truncating the coefficient expansion.
class ModelOneOperator final : public BlockOperator {
public:
  ModelOneOperator(const fem::FemSpace& space, const rf::CoefficientData& data,
                   std::shared_ptr<const chaos::IndexSet> basis);

  Eigen::MatrixXd apply(const Eigen::MatrixXd& u) const override;
  std::shared_ptr<const chaos::IndexSet> basis_ptr() const override { return basis_; }
  int n_dof() const override { return space_->n_dof(); }

  const fem::FemSpace& space() const { return *space_; }
  double sigma() const { return sigma_; }
  const PairTable& pairs() const { return pairs_; }
  const Eigen::MatrixXd& monomials() const { return mono_; }
  const Eigen::VectorXd& prefactor() const { return prefactor_; }

  /// Orthonormal-frame diagonal coefficient E[a He_g^2]/g! at quadrature points.
  Eigen::VectorXd diagonal_coefficient(int g) const;

private:
  const fem::FemSpace* space_;
  std::shared_ptr<const chaos::IndexSet> basis_;
  PairTable pairs_;
  Eigen::MatrixXd mono_;
  Eigen::VectorXd prefactor_;
  double sigma_;
};

/// Model-I operator in the truncated tensor form sum_alpha C_alpha (x) S_alpha
/// over the coefficient set J_{M, p_hat}.
class ModelOneTensorOperator final : public BlockOperator {
public:
  ModelOneTensorOperator(const fem::FemSpace& space, const rf::CoefficientData& data,
                         std::shared_ptr<const chaos::IndexSet> basis, int p_hat);

  Eigen::MatrixXd apply(const Eigen::MatrixXd& u) const override;
  std::shared_ptr<const chaos::IndexSet> basis_ptr() const override { return basis_; }
  int n_dof() const override { return space_->n_dof(); }
  int terms() const { return static_cast<int>(chaos_matrices_.size()); }

private:
  const fem::FemSpace* space_;
  std::shared_ptr<const chaos::IndexSet> basis_;
  std::vector<Eigen::SparseMatrix<double>> chaos_matrices_; ///< orthonormal-frame C_alpha
  std::vector<fem::SpMat> stiffness_matrices_;
};

/// Block lower-triangular Model-II propagator with a single factorization of
/// the diagonal block, applied or inverted by forward substitution.
class TriangularPropagator {
public:
  TriangularPropagator(const fem::FemSpace& space, const rf::CoefficientData& data,
                       std::shared_ptr<const chaos::IndexSet> basis);

  Eigen::MatrixXd apply(const Eigen::MatrixXd& u) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

  const chaos::IndexSet& basis() const { return *basis_; }
  std::shared_ptr<const chaos::IndexSet> basis_ptr() const { return basis_; }
  const fem::FemSpace& space() const { return *space_; }
  int n_dof() const { return space_->n_dof(); }
  int modes() const { return basis_->size(); }
  double sigma() const { return sigma_; }

  int factorization_count() const { return factorizations_; }
  long substitution_count() const { return substitutions_; }

private:
  const fem::FemSpace* space_;
  std::shared_ptr<const chaos::IndexSet> basis_;
  PairTable pairs_;
  Eigen::MatrixXd mono_;
  Eigen::VectorXd wick_prefactor_;
  double sigma_;
  fem::SpdSolver diag_solver_;
  int factorizations_ = 0;
  mutable long substitutions_ = 0;
};

ModelOneOperator assemble_model1(const fem::FemSpace& space, const rf::LognormalCoefficient& coeff,
                                 std::shared_ptr<const chaos::IndexSet> basis,
                                 rf::MomentForm form = rf::MomentForm::full_field);
ModelOneTensorOperator assemble_model1_tensor(const fem::FemSpace& space, const rf::LognormalCoefficient& coeff,
                                              std::shared_ptr<const chaos::IndexSet> basis, int p_hat,
                                              rf::MomentForm form = rf::MomentForm::full_field);
TriangularPropagator assemble_model2(const fem::FemSpace& space, const rf::LognormalCoefficient& coeff,
                                     std::shared_ptr<const chaos::IndexSet> basis);

/// Right-hand side block for a deterministic load (mode zero only).
Eigen::MatrixXd load_block(const Eigen::VectorXd& f_load, int modes);

/// Orthonormal-frame block rows -> canonical He-coefficient expansion.
chaos::ChaosExpansion<Eigen::VectorXd> block_to_expansion(const Eigen::MatrixXd& u,
                                                          std::shared_ptr<const chaos::IndexSet> basis);
/// Canonical He expansion -> orthonormal-frame block rows.
Eigen::MatrixXd expansion_to_block(const chaos::ChaosExpansion<Eigen::VectorXd>& u);

/// Solve the decoupled Model-II propagator for a deterministic load; the
/// coefficient must carry the Wick-inverse scaling.
chaos::ChaosExpansion<Eigen::VectorXd> solve_model2(const fem::FemSpace& space,
                                                    const rf::LognormalCoefficient& coeff,
                                                    std::shared_ptr<const chaos::IndexSet> basis,
                                                    const Eigen::VectorXd& f_load);

} // namespace wicksg::sg

#endif
