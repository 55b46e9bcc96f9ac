#include "wicksg/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace wicksg::sg {

using chaos::IndexSet;
using chaos::MultiIndex;

PairTable PairTable::build(const IndexSet& set) {
  PairTable table;
  table.row_begin.assign(static_cast<std::size_t>(set.size()) + 1, 0);
  for (int hi = 0; hi < set.size(); ++hi) {
    table.row_begin[static_cast<std::size_t>(hi)] = static_cast<int>(table.entries.size());
    const MultiIndex& h = set.at(hi);
    for (int lo = 0; lo < set.size(); ++lo) {
      if (set.degree(lo) > set.degree(hi)) break; // graded order: no later member can be <= h
      const MultiIndex& l = set.at(lo);
      if (!l.leq(h)) continue;
      const int diff = set.position(h.minus(l));
      Entry e;
      e.hi = hi;
      e.lo = lo;
      e.diff = diff;
      const double fh = set.factorial(hi), fl = set.factorial(lo), fd = set.factorial(diff);
      e.sym_weight = chaos::binomial(h, l) * std::sqrt(fl / fh);
      e.tri_weight = std::sqrt(fh / fl) / fd;
      table.entries.push_back(e);
    }
  }
  table.row_begin[static_cast<std::size_t>(set.size())] = static_cast<int>(table.entries.size());
  return table;
}

Eigen::MatrixXd monomial_table(const IndexSet& set, const Eigen::MatrixXd& psi) {
  if (psi.cols() < set.dimension())
    throw std::invalid_argument("monomial_table: amplitude has fewer modes than the index set");
  Eigen::MatrixXd mono(psi.rows(), set.size());
  mono.col(0).setOnes();
  for (int i = 1; i < set.size(); ++i) {
    const MultiIndex& a = set.at(i);
    int k = 0;
    while (a[k] == 0) ++k;
    const int parent = set.position(a.minus(MultiIndex::unit(a.size(), k)));
    mono.col(i) = mono.col(parent).cwiseProduct(psi.col(k));
  }
  return mono;
}

ModelOneOperator::ModelOneOperator(const fem::FemSpace& space, const rf::CoefficientData& data,
                                   std::shared_ptr<const IndexSet> basis)
    : space_(&space),
      basis_(std::move(basis)),
      pairs_(PairTable::build(*basis_)),
      mono_(monomial_table(*basis_, data.psi)),
      prefactor_(data.chaos_prefactor),
      sigma_(data.sigma) {
  if (data.psi.rows() != space.quad_weights().size())
    throw std::invalid_argument("ModelOneOperator: coefficient data must live on the quadrature points");
}

Eigen::MatrixXd ModelOneOperator::apply(const Eigen::MatrixXd& u) const {
  const int n = basis_->size();
  if (u.rows() != n || u.cols() != space_->n_dof())
    throw std::invalid_argument("ModelOneOperator::apply: block shape mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, space_->n_dof());
  const Eigen::VectorXd wq = space_->quad_weights().cwiseProduct(prefactor_);
  for (int c = 0; c < space_->dim(); ++c) {
    const fem::SpMat& g = space_->grad_op(c);
    const Eigen::MatrixXd v = g * u.transpose(); // n_q x N
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(v.rows(), n);
    for (const auto& e : pairs_.entries)
      t.col(e.lo) += e.sym_weight * mono_.col(e.diff).cwiseProduct(v.col(e.hi));
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(v.rows(), n);
    for (const auto& e : pairs_.entries)
      y.col(e.hi) += e.sym_weight * mono_.col(e.diff).cwiseProduct(t.col(e.lo));
    y.array().colwise() *= wq.array();
    out += (g.transpose() * y).transpose();
  }
  return out;
}

Eigen::VectorXd ModelOneOperator::diagonal_coefficient(int g) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(mono_.rows());
  for (int t = pairs_.row_begin[static_cast<std::size_t>(g)]; t < pairs_.row_begin[static_cast<std::size_t>(g) + 1]; ++t) {
    const auto& e = pairs_.entries[static_cast<std::size_t>(t)];
    c += (e.sym_weight * e.sym_weight) * mono_.col(e.diff).cwiseProduct(mono_.col(e.diff));
  }
  return c.cwiseProduct(prefactor_);
}

ModelOneTensorOperator::ModelOneTensorOperator(const fem::FemSpace& space, const rf::CoefficientData& data,
                                               std::shared_ptr<const IndexSet> basis, int p_hat)
    : space_(&space), basis_(std::move(basis)) {
  if (p_hat < 0) throw std::invalid_argument("ModelOneTensorOperator: p_hat must be non-negative");
  if (p_hat > 2 * basis_->max_degree())
    throw std::invalid_argument(
        "ModelOneTensorOperator: p_hat beyond 2p only adds vanishing terms; use the exact operator");
  if (data.psi.rows() != space.quad_weights().size())
    throw std::invalid_argument("ModelOneTensorOperator: coefficient data must live on the quadrature points");
  auto coeff_set = chaos::build_index_set(basis_->dimension(), p_hat);
  const auto tensor = chaos::triple_product_cache(basis_, coeff_set);
  const Eigen::MatrixXd mono = monomial_table(*coeff_set, data.psi);
  for (int a = 0; a < coeff_set->size(); ++a) {
    const auto& slice = tensor->coefficient_slice(a);
    if (slice.empty()) continue;
    std::vector<Eigen::Triplet<double>> scaled;
    scaled.reserve(slice.size());
    for (const auto& t : slice) {
      const double w = 1.0 / std::sqrt(basis_->factorial(t.row()) * basis_->factorial(t.col()));
      scaled.emplace_back(t.row(), t.col(), t.value() * w);
    }
    Eigen::SparseMatrix<double> c(basis_->size(), basis_->size());
    c.setFromTriplets(scaled.begin(), scaled.end());
    chaos_matrices_.push_back(std::move(c));
    const Eigen::VectorXd a_alpha =
        data.chaos_prefactor.cwiseProduct(mono.col(a)) / coeff_set->factorial(a);
    stiffness_matrices_.push_back(fem::assemble_stiffness(space, a_alpha));
  }
}

Eigen::MatrixXd ModelOneTensorOperator::apply(const Eigen::MatrixXd& u) const {
  if (u.rows() != basis_->size() || u.cols() != space_->n_dof())
    throw std::invalid_argument("ModelOneTensorOperator::apply: block shape mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(u.rows(), u.cols());
  // [A u] = sum_alpha C_alpha [u S_alpha] with S_alpha symmetric
  for (std::size_t k = 0; k < chaos_matrices_.size(); ++k) {
    const Eigen::MatrixXd su = u * stiffness_matrices_[k];
    out += chaos_matrices_[k] * su;
  }
  return out;
}

TriangularPropagator::TriangularPropagator(const fem::FemSpace& space, const rf::CoefficientData& data,
                                           std::shared_ptr<const IndexSet> basis)
    : space_(&space),
      basis_(std::move(basis)),
      pairs_(PairTable::build(*basis_)),
      mono_(monomial_table(*basis_, data.psi)),
      wick_prefactor_(data.wick_prefactor),
      sigma_(data.sigma),
      diag_solver_(fem::assemble_stiffness(space, data.wick_prefactor)) {
  factorizations_ = 1;
}

Eigen::MatrixXd TriangularPropagator::apply(const Eigen::MatrixXd& u) const {
  const int n = basis_->size();
  if (u.rows() != n || u.cols() != space_->n_dof())
    throw std::invalid_argument("TriangularPropagator::apply: block shape mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, space_->n_dof());
  const Eigen::VectorXd wq = space_->quad_weights().cwiseProduct(wick_prefactor_);
  for (int c = 0; c < space_->dim(); ++c) {
    const fem::SpMat& g = space_->grad_op(c);
    const Eigen::MatrixXd v = g * u.transpose();
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(v.rows(), n);
    for (const auto& e : pairs_.entries)
      y.col(e.hi) += e.tri_weight * mono_.col(e.diff).cwiseProduct(v.col(e.lo));
    y.array().colwise() *= wq.array();
    out += (g.transpose() * y).transpose();
  }
  return out;
}

Eigen::MatrixXd TriangularPropagator::solve(const Eigen::MatrixXd& b) const {
  const int n = basis_->size();
  if (b.rows() != n || b.cols() != space_->n_dof())
    throw std::invalid_argument("TriangularPropagator::solve: block shape mismatch");
  const Eigen::Index nq = space_->quad_weights().size();
  Eigen::MatrixXd u(n, space_->n_dof());
  std::vector<Eigen::MatrixXd> v(static_cast<std::size_t>(space_->dim()));
  for (int c = 0; c < space_->dim(); ++c) v[static_cast<std::size_t>(c)].setZero(nq, n);
  const Eigen::VectorXd wq = space_->quad_weights().cwiseProduct(wick_prefactor_);
  for (int g = 0; g < n; ++g) {
    Eigen::VectorXd r = b.row(g).transpose();
    for (int c = 0; c < space_->dim(); ++c) {
      Eigen::VectorXd z = Eigen::VectorXd::Zero(nq);
      for (int t = pairs_.row_begin[static_cast<std::size_t>(g)];
           t < pairs_.row_begin[static_cast<std::size_t>(g) + 1]; ++t) {
        const auto& e = pairs_.entries[static_cast<std::size_t>(t)];
        if (e.lo == g) continue; // the diagonal stays on the left-hand side
        z += e.tri_weight * mono_.col(e.diff).cwiseProduct(v[static_cast<std::size_t>(c)].col(e.lo));
      }
      r.noalias() -= space_->grad_op(c).transpose() * wq.cwiseProduct(z);
    }
    u.row(g) = diag_solver_.solve(r).transpose();
    ++substitutions_;
    for (int c = 0; c < space_->dim(); ++c)
      v[static_cast<std::size_t>(c)].col(g) = space_->grad_op(c) * u.row(g).transpose();
  }
  return u;
}

namespace {

rf::CoefficientData data_on_quad(const fem::FemSpace& space, const rf::LognormalCoefficient& coeff,
                                 rf::MomentForm form = rf::MomentForm::full_field) {
  return coeff.evaluate_on(space.quad_points(), form);
}

} // namespace

ModelOneOperator assemble_model1(const fem::FemSpace& space, const rf::LognormalCoefficient& coeff,
                                 std::shared_ptr<const IndexSet> basis, rf::MomentForm form) {
  if (coeff.wick_inverse_scaled())
    throw std::invalid_argument("assemble_model1: expects the unscaled log-normal coefficient");
  return {space, data_on_quad(space, coeff, form), std::move(basis)};
}

ModelOneTensorOperator assemble_model1_tensor(const fem::FemSpace& space, const rf::LognormalCoefficient& coeff,
                                              std::shared_ptr<const IndexSet> basis, int p_hat,
                                              rf::MomentForm form) {
  if (coeff.wick_inverse_scaled())
    throw std::invalid_argument("assemble_model1_tensor: expects the unscaled log-normal coefficient");
  return {space, data_on_quad(space, coeff, form), std::move(basis), p_hat};
}

TriangularPropagator assemble_model2(const fem::FemSpace& space, const rf::LognormalCoefficient& coeff,
                                     std::shared_ptr<const IndexSet> basis) {
  if (!coeff.wick_inverse_scaled())
    throw std::invalid_argument("assemble_model2: coefficient must carry the Wick-inverse scaling");
  return {space, data_on_quad(space, coeff), std::move(basis)};
}

Eigen::MatrixXd load_block(const Eigen::VectorXd& f_load, int modes) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(modes, f_load.size());
  b.row(0) = f_load.transpose();
  return b;
}

chaos::ChaosExpansion<Eigen::VectorXd> block_to_expansion(const Eigen::MatrixXd& u,
                                                          std::shared_ptr<const IndexSet> basis) {
  chaos::ChaosExpansion<Eigen::VectorXd> out;
  out.coeff.reserve(static_cast<std::size_t>(u.rows()));
  for (int i = 0; i < u.rows(); ++i)
    out.coeff.push_back(u.row(i).transpose() / std::sqrt(basis->factorial(i)));
  out.basis = std::move(basis);
  out.normalization = chaos::Normalization::he_unnormalized;
  return out;
}

Eigen::MatrixXd expansion_to_block(const chaos::ChaosExpansion<Eigen::VectorXd>& u) {
  u.check();
  const auto he = chaos::with_normalization(u, chaos::Normalization::orthonormal);
  Eigen::MatrixXd b(u.size(), he.coeff.front().size());
  for (int i = 0; i < u.size(); ++i) b.row(i) = he.coeff[static_cast<std::size_t>(i)].transpose();
  return b;
}

chaos::ChaosExpansion<Eigen::VectorXd> solve_model2(const fem::FemSpace& space,
                                                    const rf::LognormalCoefficient& coeff,
                                                    std::shared_ptr<const IndexSet> basis,
                                                    const Eigen::VectorXd& f_load) {
  const TriangularPropagator prop = assemble_model2(space, coeff, basis);
  const Eigen::MatrixXd u = prop.solve(load_block(f_load, prop.modes()));
  return block_to_expansion(u, std::move(basis));
}

} // namespace wicksg::sg
