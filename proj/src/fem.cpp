#include "wicksg/fem.hpp"

#include "wicksg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace wicksg::fem {

namespace {

// Lagrange basis on equispaced reference nodes in [-1, 1]: values and
// derivatives of all q+1 shape functions at the given points.
void lagrange_basis(int q, const Eigen::VectorXd& pts, Eigen::MatrixXd& value, Eigen::MatrixXd& deriv) {
  const int nb = q + 1;
  Eigen::VectorXd nodes = Eigen::VectorXd::LinSpaced(nb, -1.0, 1.0);
  value.resize(pts.size(), nb);
  deriv.resize(pts.size(), nb);
  for (int j = 0; j < nb; ++j) {
    for (Eigen::Index p = 0; p < pts.size(); ++p) {
      double v = 1.0;
      double d = 0.0;
      for (int k = 0; k < nb; ++k) {
        if (k == j) continue;
        const double den = nodes[j] - nodes[k];
        d = d * (pts[p] - nodes[k]) / den + v / den;
        v *= (pts[p] - nodes[k]) / den;
      }
      value(p, j) = v;
      deriv(p, j) = d;
    }
  }
}

struct Basis1D {
  Eigen::VectorXd quad_ref;     // reference quadrature points
  Eigen::VectorXd quad_w;       // reference weights
  Eigen::MatrixXd value, deriv; // at reference quadrature points
};

Basis1D make_basis(int q, int quad_per_dim) {
  Basis1D b;
  const int nq = quad_per_dim > 0 ? quad_per_dim : q + 2;
  std::tie(b.quad_ref, b.quad_w) = gauss_legendre(nq);
  lagrange_basis(q, b.quad_ref, b.value, b.deriv);
  return b;
}

} // namespace

FemSpace FemSpace::interval(double a, double b, int n, int q, int quad_per_dim) {
  if (b <= a) throw std::invalid_argument("FemSpace: empty interval");
  if (n < 1) throw std::invalid_argument("FemSpace: need at least one element");
  if (q < 1 || q > 4) throw std::invalid_argument("FemSpace: 1D order must be in 1..4");
  if (n * q - 1 < 1) throw std::invalid_argument("FemSpace: no interior degrees of freedom");
  FemSpace s;
  s.dim_ = 1;
  s.order_ = q;
  s.lo_ = {a, 0.0};
  s.hi_ = {b, 0.0};
  s.n_ = {n, 0};
  const Basis1D basis = make_basis(q, quad_per_dim);
  const int nq = static_cast<int>(basis.quad_ref.size());
  const double h = (b - a) / n;
  const int n_nodes = n * q + 1;
  s.n_dof_ = n_nodes - 2;
  s.node_points_.resize(n_nodes, 1);
  for (int i = 0; i < n_nodes; ++i) s.node_points_(i, 0) = a + (b - a) * i / (n_nodes - 1);
  s.node_to_dof_.assign(static_cast<std::size_t>(n_nodes), -1);
  for (int i = 1; i < n_nodes - 1; ++i) s.node_to_dof_[static_cast<std::size_t>(i)] = i - 1;
  s.dof_points_.resize(s.n_dof_, 1);
  for (int i = 1; i < n_nodes - 1; ++i) s.dof_points_(i - 1, 0) = s.node_points_(i, 0);
  s.quad_points_.resize(n * nq, 1);
  s.quad_weights_.resize(n * nq);
  std::vector<Eigen::Triplet<double>> tv, tg;
  for (int e = 0; e < n; ++e) {
    const double x0 = a + e * h;
    for (int p = 0; p < nq; ++p) {
      const int row = e * nq + p;
      s.quad_points_(row, 0) = x0 + (basis.quad_ref[p] + 1.0) * h / 2.0;
      s.quad_weights_[row] = basis.quad_w[p] * h / 2.0;
      for (int j = 0; j <= q; ++j) {
        const int dof = s.node_to_dof_[static_cast<std::size_t>(e * q + j)];
        if (dof < 0) continue;
        tv.emplace_back(row, dof, basis.value(p, j));
        tg.emplace_back(row, dof, basis.deriv(p, j) * 2.0 / h);
      }
    }
  }
  s.value_op_.resize(n * nq, s.n_dof_);
  s.value_op_.setFromTriplets(tv.begin(), tv.end());
  s.grad_op_[0].resize(n * nq, s.n_dof_);
  s.grad_op_[0].setFromTriplets(tg.begin(), tg.end());
  return s;
}

FemSpace FemSpace::rectangle(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi, int nx, int ny, int q,
                             int quad_per_dim) {
  if (hi[0] <= lo[0] || hi[1] <= lo[1]) throw std::invalid_argument("FemSpace: empty rectangle");
  if (nx < 1 || ny < 1) throw std::invalid_argument("FemSpace: need at least one element per direction");
  if (q < 1 || q > 2) throw std::invalid_argument("FemSpace: 2D order must be 1 or 2");
  if (nx * q - 1 < 1 || ny * q - 1 < 1) throw std::invalid_argument("FemSpace: no interior degrees of freedom");
  FemSpace s;
  s.dim_ = 2;
  s.order_ = q;
  s.lo_ = lo;
  s.hi_ = hi;
  s.n_ = {nx, ny};
  const Basis1D basis = make_basis(q, quad_per_dim);
  const int nq1 = static_cast<int>(basis.quad_ref.size());
  const double hx = (hi[0] - lo[0]) / nx, hy = (hi[1] - lo[1]) / ny;
  const int nx_nodes = nx * q + 1, ny_nodes = ny * q + 1;
  const int n_nodes = nx_nodes * ny_nodes;
  s.node_points_.resize(n_nodes, 2);
  s.node_to_dof_.assign(static_cast<std::size_t>(n_nodes), -1);
  int dof = 0;
  for (int iy = 0; iy < ny_nodes; ++iy) {
    for (int ix = 0; ix < nx_nodes; ++ix) {
      const int node = iy * nx_nodes + ix;
      s.node_points_(node, 0) = lo[0] + (hi[0] - lo[0]) * ix / (nx_nodes - 1);
      s.node_points_(node, 1) = lo[1] + (hi[1] - lo[1]) * iy / (ny_nodes - 1);
      if (ix > 0 && ix < nx_nodes - 1 && iy > 0 && iy < ny_nodes - 1)
        s.node_to_dof_[static_cast<std::size_t>(node)] = dof++;
    }
  }
  s.n_dof_ = dof;
  s.dof_points_.resize(dof, 2);
  for (int node = 0; node < n_nodes; ++node) {
    const int d = s.node_to_dof_[static_cast<std::size_t>(node)];
    if (d >= 0) s.dof_points_.row(d) = s.node_points_.row(node);
  }
  const int nq_elem = nq1 * nq1;
  const int n_quad = nx * ny * nq_elem;
  s.quad_points_.resize(n_quad, 2);
  s.quad_weights_.resize(n_quad);
  std::vector<Eigen::Triplet<double>> tv, tgx, tgy;
  for (int ey = 0; ey < ny; ++ey) {
    for (int ex = 0; ex < nx; ++ex) {
      const double x0 = lo[0] + ex * hx, y0 = lo[1] + ey * hy;
      for (int py = 0; py < nq1; ++py) {
        for (int px = 0; px < nq1; ++px) {
          const int row = ((ey * nx + ex) * nq1 + py) * nq1 + px;
          s.quad_points_(row, 0) = x0 + (basis.quad_ref[px] + 1.0) * hx / 2.0;
          s.quad_points_(row, 1) = y0 + (basis.quad_ref[py] + 1.0) * hy / 2.0;
          s.quad_weights_[row] = basis.quad_w[px] * basis.quad_w[py] * hx * hy / 4.0;
          for (int jy = 0; jy <= q; ++jy) {
            for (int jx = 0; jx <= q; ++jx) {
              const int node = (ey * q + jy) * nx_nodes + (ex * q + jx);
              const int d = s.node_to_dof_[static_cast<std::size_t>(node)];
              if (d < 0) continue;
              const double v = basis.value(px, jx) * basis.value(py, jy);
              tv.emplace_back(row, d, v);
              tgx.emplace_back(row, d, basis.deriv(px, jx) * (2.0 / hx) * basis.value(py, jy));
              tgy.emplace_back(row, d, basis.value(px, jx) * basis.deriv(py, jy) * (2.0 / hy));
            }
          }
        }
      }
    }
  }
  s.value_op_.resize(n_quad, dof);
  s.value_op_.setFromTriplets(tv.begin(), tv.end());
  s.grad_op_[0].resize(n_quad, dof);
  s.grad_op_[0].setFromTriplets(tgx.begin(), tgx.end());
  s.grad_op_[1].resize(n_quad, dof);
  s.grad_op_[1].setFromTriplets(tgy.begin(), tgy.end());
  return s;
}

FemSpace build_mesh(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, const std::vector<int>& n, int q) {
  if (lo.size() == 1) return FemSpace::interval(lo[0], hi[0], n.at(0), q);
  if (lo.size() == 2)
    return FemSpace::rectangle(Eigen::Vector2d(lo[0], lo[1]), Eigen::Vector2d(hi[0], hi[1]), n.at(0),
                               n.size() > 1 ? n.at(1) : n.at(0), q);
  throw std::invalid_argument("build_mesh: dimension must be 1 or 2");
}

Eigen::VectorXd FemSpace::with_boundary(const Eigen::VectorXd& u_interior) const {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(node_points_.rows());
  for (Eigen::Index node = 0; node < node_points_.rows(); ++node) {
    const int d = node_to_dof_[static_cast<std::size_t>(node)];
    if (d >= 0) full[node] = u_interior[d];
  }
  return full;
}

SpMat assemble_stiffness(const FemSpace& space, const Eigen::VectorXd& c_at_quad) {
  if (c_at_quad.size() != space.quad_weights().size())
    throw std::invalid_argument("assemble_stiffness: coefficient vector length mismatch");
  const Eigen::VectorXd wc = space.quad_weights().cwiseProduct(c_at_quad);
  SpMat s(space.n_dof(), space.n_dof());
  for (int c = 0; c < space.dim(); ++c) {
    const SpMat& g = space.grad_op(c);
    s += SpMat(g.transpose() * wc.asDiagonal() * g);
  }
  s.makeCompressed();
  return s;
}

SpMat assemble_stiffness(const FemSpace& space, const std::function<double(const Eigen::VectorXd&)>& c) {
  Eigen::VectorXd cq(space.quad_weights().size());
  for (Eigen::Index i = 0; i < cq.size(); ++i) cq[i] = c(space.quad_points().row(i).transpose());
  return assemble_stiffness(space, cq);
}

Eigen::VectorXd assemble_load(const FemSpace& space, const Eigen::VectorXd& f_at_quad) {
  if (f_at_quad.size() != space.quad_weights().size())
    throw std::invalid_argument("assemble_load: force vector length mismatch");
  return space.value_op().transpose() * space.quad_weights().cwiseProduct(f_at_quad);
}

Eigen::VectorXd assemble_load(const FemSpace& space, const std::function<double(const Eigen::VectorXd&)>& f) {
  Eigen::VectorXd fq(space.quad_weights().size());
  for (Eigen::Index i = 0; i < fq.size(); ++i) fq[i] = f(space.quad_points().row(i).transpose());
  return assemble_load(space, fq);
}

SpdSolver::SpdSolver(const SpMat& s) {
  llt_.compute(s);
  if (llt_.info() != Eigen::Success)
    throw std::runtime_error("SpdSolver: Cholesky factorization failed (matrix not SPD)");
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& b) const { return llt_.solve(b); }

Eigen::VectorXd solve_deterministic(const SpMat& s, const Eigen::VectorXd& b) {
  const SpdSolver solver(s);
  Eigen::VectorXd u = solver.solve(b);
  const double bn = b.norm();
  if (bn > 0.0) {
    const double rel = (s * u - b).norm() / bn;
    if (rel > 1e-10) throw std::runtime_error("solve_deterministic: residual " + std::to_string(rel));
  }
  return u;
}

double h1_seminorm(const FemSpace& space, const Eigen::VectorXd& u) {
  double acc = 0.0;
  for (int c = 0; c < space.dim(); ++c) {
    const Eigen::VectorXd g = space.grad_op(c) * u;
    acc += g.cwiseProduct(g).dot(space.quad_weights());
  }
  return std::sqrt(acc);
}

double l2_norm(const FemSpace& space, const Eigen::VectorXd& u) {
  const Eigen::VectorXd v = space.value_op() * u;
  return std::sqrt(v.cwiseProduct(v).dot(space.quad_weights()));
}

double l2_error(const FemSpace& space, const Eigen::VectorXd& u,
                const std::function<double(const Eigen::VectorXd&)>& exact) {
  Eigen::VectorXd v = space.value_op() * u;
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] -= exact(space.quad_points().row(i).transpose());
  return std::sqrt(v.cwiseProduct(v).dot(space.quad_weights()));
}

namespace {

double chaos_norm_impl(const FemSpace& space, const chaos::ChaosExpansion<Eigen::VectorXd>& u,
                       double (*mode_norm)(const FemSpace&, const Eigen::VectorXd&)) {
  u.check();
  double acc = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    const double w =
        (u.normalization == chaos::Normalization::orthonormal) ? 1.0 : u.basis->factorial(i);
    const double nrm = mode_norm(space, u.coeff[static_cast<std::size_t>(i)]);
    acc += w * nrm * nrm;
  }
  return std::sqrt(acc);
}

} // namespace

double chaos_h1_norm(const FemSpace& space, const chaos::ChaosExpansion<Eigen::VectorXd>& u) {
  return chaos_norm_impl(space, u, &h1_seminorm);
}

double chaos_l2_norm(const FemSpace& space, const chaos::ChaosExpansion<Eigen::VectorXd>& u) {
  return chaos_norm_impl(space, u, &l2_norm);
}

void write_field(const std::string& path, const FemSpace& space, const Eigen::VectorXd& u_interior) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_field: cannot open " + path);
  out << std::setprecision(17);
  const Eigen::VectorXd full = space.with_boundary(u_interior);
  for (Eigen::Index node = 0; node < space.node_points().rows(); ++node) {
    for (Eigen::Index c = 0; c < space.node_points().cols(); ++c) out << space.node_points()(node, c) << " ";
    out << full[node] << "\n";
  }
}

std::vector<std::pair<double, double>> line_restriction(const FemSpace& space, const Eigen::VectorXd& u_interior,
                                                        double y0) {
  const Eigen::VectorXd full = space.with_boundary(u_interior);
  std::vector<std::pair<double, double>> line;
  const double tol = 1e-12 * (1.0 + std::abs(y0));
  for (Eigen::Index node = 0; node < space.node_points().rows(); ++node) {
    if (space.dim() == 2 && std::abs(space.node_points()(node, 1) - y0) > tol) continue;
    line.emplace_back(space.node_points()(node, 0), full[node]);
  }
  std::sort(line.begin(), line.end());
  return line;
}

} // namespace wicksg::fem
