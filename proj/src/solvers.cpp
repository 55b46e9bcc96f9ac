#include "wicksg/solvers.hpp"
#include <memory>

#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace wicksg::sg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double effective_gamma(const SolverOptions& opts, double sigma) {
  return opts.gamma > 0.0 ? opts.gamma : 1.0 / (1.0 + 3.0 * sigma * sigma);
}

} // namespace

SolveReport block_gauss_seidel(const ModelOneOperator& op, const Eigen::VectorXd& f_load,
                               const SolverOptions& opts) {
  const auto t0 = Clock::now();
  const fem::FemSpace& space = op.space();
  const int n = op.modes();
  const Eigen::MatrixXd b = load_block(f_load, n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) throw std::invalid_argument("block_gauss_seidel: zero load");

  // factor every diagonal block once
  std::vector<std::unique_ptr<fem::SpdSolver>> diag;
  diag.reserve(static_cast<std::size_t>(n));
  for (int g = 0; g < n; ++g)
    diag.push_back(std::make_unique<fem::SpdSolver>(fem::assemble_stiffness(space, op.diagonal_coefficient(g))));

  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, space.n_dof());
  SolveReport report;
  // sweep state: per-component gradients V and the half-transformed T = U V
  const Eigen::Index nq = space.quad_weights().size();
  const int dim = space.dim();
  std::vector<Eigen::MatrixXd> t(static_cast<std::size_t>(dim), Eigen::MatrixXd::Zero(nq, n));
  const auto& pairs = op.pairs();
  const Eigen::MatrixXd& mono = op.monomials();
  const Eigen::VectorXd wq = space.quad_weights().cwiseProduct(op.prefactor());

  for (int sweep = 1; sweep <= opts.max_iter; ++sweep) {
    for (int g = 0; g < n; ++g) {
      Eigen::VectorXd r = b.row(g).transpose();
      for (int c = 0; c < dim; ++c) {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(nq);
        for (int e = pairs.row_begin[static_cast<std::size_t>(g)];
             e < pairs.row_begin[static_cast<std::size_t>(g) + 1]; ++e) {
          const auto& p = pairs.entries[static_cast<std::size_t>(e)];
          y += p.sym_weight * mono.col(p.diff).cwiseProduct(t[static_cast<std::size_t>(c)].col(p.lo));
        }
        r.noalias() -= space.grad_op(c).transpose() * wq.cwiseProduct(y);
      }
      const Eigen::VectorXd du = diag[static_cast<std::size_t>(g)]->solve(r);
      u.row(g) += du.transpose();
      for (int c = 0; c < dim; ++c) {
        const Eigen::VectorXd dv = space.grad_op(c) * du;
        for (int e = pairs.row_begin[static_cast<std::size_t>(g)];
             e < pairs.row_begin[static_cast<std::size_t>(g) + 1]; ++e) {
          const auto& p = pairs.entries[static_cast<std::size_t>(e)];
          t[static_cast<std::size_t>(c)].col(p.lo) += p.sym_weight * mono.col(p.diff).cwiseProduct(dv);
        }
      }
    }
    const double rel = (b - op.apply(u)).norm() / bnorm;
    report.residual_history.push_back(rel);
    if (rel <= opts.tol) {
      report.iterations = sweep;
      report.converged = true;
      break;
    }
  }
  if (!report.converged) report.iterations = opts.max_iter;
  report.solution = block_to_expansion(u, op.basis_ptr());
  report.wall_time_s = seconds_since(t0);
  return report;
}

SolveReport richardson_preconditioned(const BlockOperator& op, const TriangularPropagator& prop,
                                      const Eigen::VectorXd& f_load, const SolverOptions& opts) {
  const auto t0 = Clock::now();
  const int n = op.modes();
  const Eigen::MatrixXd b = load_block(f_load, n);
  const Eigen::MatrixXd bp = prop.solve(b);
  const double bnorm = b.norm();
  const double bpnorm = bp.norm();
  if (bpnorm == 0.0 || bnorm == 0.0) throw std::invalid_argument("richardson: zero load");
  const double gamma = effective_gamma(opts, prop.sigma());

  Eigen::MatrixXd u = (opts.initial == SolverOptions::Initial::model2)
                          ? bp
                          : Eigen::MatrixXd::Zero(n, op.n_dof());
  SolveReport report;
  auto relative_residual = [&](const Eigen::MatrixXd& z, const Eigen::MatrixXd& r) {
    return opts.residual == SolverOptions::ResidualNorm::preconditioned ? z.norm() / bpnorm
                                                                        : r.norm() / bnorm;
  };
  Eigen::MatrixXd r = b - op.apply(u);
  Eigen::MatrixXd z = bp - prop.solve(op.apply(u));
  double rel = relative_residual(z, r);
  double best = rel;
  report.residual_history.push_back(rel);
  report.converged = rel <= opts.tol;
  for (int it = 1; !report.converged && it <= opts.max_iter; ++it) {
    u += gamma * z;
    r = b - op.apply(u);
    z = bp - prop.solve(op.apply(u));
    rel = relative_residual(z, r);
    report.residual_history.push_back(rel);
    report.iterations = it;
    if (rel <= opts.tol) {
      report.converged = true;
      break;
    }
    best = std::min(best, rel);
    // The preconditioned operator is strongly non-normal and legitimate runs
    // show large residual transients (160x has been observed on converging
    // cases); abort only on catastrophic growth.
    if (!std::isfinite(rel) || rel > 1e4 * best) break;
  }
  report.solution = block_to_expansion(u, op.basis_ptr());
  report.wall_time_s = seconds_since(t0);
  return report;
}

SolveReport gmres_preconditioned(const BlockOperator& op, const TriangularPropagator& prop,
                                 const Eigen::VectorXd& f_load, const SolverOptions& opts) {
  const auto t0 = Clock::now();
  const int n = op.modes();
  const Eigen::Index len = static_cast<Eigen::Index>(n) * op.n_dof();
  const Eigen::MatrixXd b = load_block(f_load, n);
  const Eigen::MatrixXd bp = prop.solve(b);
  const double bpnorm = bp.norm();
  if (bpnorm == 0.0) throw std::invalid_argument("gmres: zero load");

  auto apply_prec = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const Eigen::MatrixXd xm = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, op.n_dof());
    const Eigen::MatrixXd y = prop.solve(op.apply(xm));
    return Eigen::Map<const Eigen::VectorXd>(y.data(), len);
  };

  Eigen::MatrixXd u0 = (opts.initial == SolverOptions::Initial::model2)
                           ? bp
                           : Eigen::MatrixXd::Zero(n, op.n_dof());
  SolveReport report;
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(u0.data(), len);
  const int max_total = opts.max_iter;
  const int cycle_len = opts.restart > 0 ? opts.restart : max_total;
  int done = 0;
  bool converged = false;
  while (done < max_total && !converged) {
    const int m = std::min(cycle_len, max_total - done);
    Eigen::VectorXd r0 = Eigen::Map<const Eigen::VectorXd>(bp.data(), len) - apply_prec(x);
    const double beta = r0.norm();
    if (beta / bpnorm <= opts.tol) {
      if (done == 0) report.residual_history.push_back(beta / bpnorm);
      converged = true;
      break;
    }
    Eigen::MatrixXd q(len, m + 1);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
    std::vector<double> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m));
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
    q.col(0) = r0 / beta;
    g[0] = beta;
    int k = 0;
    for (; k < m; ++k) {
      Eigen::VectorXd w = apply_prec(q.col(k));
      for (int i = 0; i <= k; ++i) {
        h(i, k) = q.col(i).dot(w);
        w -= h(i, k) * q.col(i);
      }
      h(k + 1, k) = w.norm();
      if (h(k + 1, k) > 0.0) q.col(k + 1) = w / h(k + 1, k);
      // apply stored Givens rotations, then generate the new one
      for (int i = 0; i < k; ++i) {
        const double tmp = cs[static_cast<std::size_t>(i)] * h(i, k) + sn[static_cast<std::size_t>(i)] * h(i + 1, k);
        h(i + 1, k) = -sn[static_cast<std::size_t>(i)] * h(i, k) + cs[static_cast<std::size_t>(i)] * h(i + 1, k);
        h(i, k) = tmp;
      }
      const double denom = std::hypot(h(k, k), h(k + 1, k));
      cs[static_cast<std::size_t>(k)] = h(k, k) / denom;
      sn[static_cast<std::size_t>(k)] = h(k + 1, k) / denom;
      h(k, k) = denom;
      h(k + 1, k) = 0.0;
      g[k + 1] = -sn[static_cast<std::size_t>(k)] * g[k];
      g[k] = cs[static_cast<std::size_t>(k)] * g[k];
      const double rel = std::abs(g[k + 1]) / bpnorm;
      report.residual_history.push_back(rel);
      ++done;
      if (rel <= opts.tol || done >= max_total) {
        ++k;
        converged = rel <= opts.tol;
        break;
      }
    }
    // solve the triangular system for the Krylov coefficients
    Eigen::VectorXd y = Eigen::VectorXd::Zero(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= h(i, j) * y[j];
      y[i] = s / h(i, i);
    }
    x += q.leftCols(k) * y;
    if (opts.restart <= 0) break; // full-memory: single cycle
  }
  report.iterations = done;
  report.converged = converged;
  const Eigen::MatrixXd um = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, op.n_dof());
  report.solution = block_to_expansion(um, op.basis_ptr());
  report.wall_time_s = seconds_since(t0);
  return report;
}

Eigen::MatrixXd densify(const BlockOperator& op, const TriangularPropagator* prop, int max_dimension) {
  const Eigen::Index dim = static_cast<Eigen::Index>(op.modes()) * op.n_dof();
  if (dim > max_dimension)
    throw std::invalid_argument("densify: instance dimension " + std::to_string(dim) + " exceeds guard");
  Eigen::MatrixXd dense(dim, dim);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(op.modes(), op.n_dof());
  for (Eigen::Index j = 0; j < dim; ++j) {
    Eigen::Map<Eigen::VectorXd>(e.data(), dim)[j] = 1.0;
    Eigen::MatrixXd col = op.apply(e);
    if (prop) col = prop->solve(col);
    dense.col(j) = Eigen::Map<const Eigen::VectorXd>(col.data(), dim);
    Eigen::Map<Eigen::VectorXd>(e.data(), dim)[j] = 0.0;
  }
  return dense;
}

double condition_estimate(const BlockOperator& op, const TriangularPropagator& prop, int max_dimension) {
  const Eigen::MatrixXd m = densify(op, &prop, max_dimension);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] <= 0.0) throw std::runtime_error("condition_estimate: singular preconditioned operator");
  return sv[0] / sv[sv.size() - 1];
}

} // namespace wicksg::sg
