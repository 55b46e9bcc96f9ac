#include "wicksg/kl.hpp"

#include "wicksg/quadrature.hpp"

#include <functional>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace wicksg {

namespace {

Eigen::VectorXd jacobi_eigenvalues(int n, const std::function<double(int)>& offdiag) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = offdiag(k);
    j(k, k - 1) = b;
    j(k - 1, k) = b;
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(j).eigenvalues();
}

} // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  Eigen::VectorXd x = jacobi_eigenvalues(n, [](int k) { return k / std::sqrt(4.0 * k * k - 1.0); });
  Eigen::VectorXd w(n);
  // Newton polish on P_n, then the closed-form weights
  for (int i = 0; i < n; ++i) {
    double xi = x[i], pn = 0.0, dp = 0.0;
    for (int it = 0; it < 4; ++it) {
      double p0 = 1.0, p1 = xi;
      if (n == 1) p1 = xi;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0) * xi * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
      pn = (n == 0) ? 1.0 : p1;
      dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
      if (std::abs(dp) > 0.0) xi -= pn / dp;
    }
    x[i] = xi;
    w[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
  }
  return {x, w};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
  Eigen::VectorXd x = jacobi_eigenvalues(n, [](int k) { return std::sqrt(static_cast<double>(k)); });
  Eigen::VectorXd w(n);
  double log_nfact = 0.0;
  for (int k = 2; k <= n; ++k) log_nfact += std::log(static_cast<double>(k));
  for (int i = 0; i < n; ++i) {
    double xi = x[i], hn = xi, hm = 1.0;
    // Newton polish on He_n; He_n' = n He_{n-1}
    for (int it = 0; it < 4; ++it) {
      hm = 1.0;
      hn = xi;
      for (int k = 1; k < n; ++k) {
        const double next = xi * hn - k * hm;
        hm = hn;
        hn = next;
      }
      if (n == 0) break;
      const double dh = n * hm;
      if (dh != 0.0) xi -= hn / dh;
    }
    x[i] = xi;
    // w_i = n! / (n^2 He_{n-1}(x_i)^2)
    w[i] = std::exp(log_nfact - 2.0 * std::log(std::abs(static_cast<double>(n) * hm)));
  }
  return {x, w};
}

} // namespace wicksg

namespace wicksg::rf {

Truncation Truncation::fixed(int m) {
  Truncation t;
  t.rule = Rule::fixed;
  t.m = m;
  return t;
}

Truncation Truncation::captured_variance(double tol) {
  Truncation t;
  t.rule = Rule::captured_variance;
  t.tol = tol;
  return t;
}

Truncation Truncation::eigenvalue_ratio(double tol) {
  Truncation t;
  t.rule = Rule::eigenvalue_ratio;
  t.tol = tol;
  return t;
}

KlGrid kl_grid_interval(double a, double b, int cells, int points_per_cell) {
  if (b <= a || cells < 1 || points_per_cell < 1) throw std::invalid_argument("kl_grid_interval: bad arguments");
  const auto [xg, wg] = gauss_legendre(points_per_cell);
  const double h = (b - a) / cells;
  KlGrid grid;
  grid.points.resize(cells * points_per_cell, 1);
  grid.weights.resize(cells * points_per_cell);
  for (int e = 0; e < cells; ++e) {
    for (int q = 0; q < points_per_cell; ++q) {
      grid.points(e * points_per_cell + q, 0) = a + e * h + (xg[q] + 1.0) * h / 2.0;
      grid.weights[e * points_per_cell + q] = wg[q] * h / 2.0;
    }
  }
  return grid;
}

KlGrid kl_grid_rectangle(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi, int cells_x, int cells_y,
                         int points_per_cell) {
  const KlGrid gx = kl_grid_interval(lo[0], hi[0], cells_x, points_per_cell);
  const KlGrid gy = kl_grid_interval(lo[1], hi[1], cells_y, points_per_cell);
  const Eigen::Index nx = gx.points.rows(), ny = gy.points.rows();
  KlGrid grid;
  grid.points.resize(nx * ny, 2);
  grid.weights.resize(nx * ny);
  for (Eigen::Index iy = 0; iy < ny; ++iy) {
    for (Eigen::Index ix = 0; ix < nx; ++ix) {
      grid.points(iy * nx + ix, 0) = gx.points(ix, 0);
      grid.points(iy * nx + ix, 1) = gy.points(iy, 0);
      grid.weights[iy * nx + ix] = gx.weights[ix] * gy.weights[iy];
    }
  }
  return grid;
}

namespace {

int select_modes(const Eigen::VectorXd& lambda, const Truncation& trunc) {
  const int n = static_cast<int>(lambda.size());
  switch (trunc.rule) {
    case Truncation::Rule::fixed: {
      if (trunc.m < 1 || trunc.m > n) throw std::invalid_argument("truncation: fixed M out of range");
      return trunc.m;
    }
    case Truncation::Rule::captured_variance: {
      const double trace = lambda.sum();
      double cum = 0.0;
      for (int m = 1; m <= n; ++m) {
        cum += lambda[m - 1];
        if (1.0 - cum / trace <= trunc.tol) return m;
      }
      return n;
    }
    case Truncation::Rule::eigenvalue_ratio: {
      for (int m = 1; m < n; ++m) {
        if (lambda[m] / lambda[0] <= trunc.tol) return m;
      }
      return n;
    }
  }
  throw std::invalid_argument("truncation: unknown rule");
}

} // namespace

KlBasis kl_numeric(const CovarianceKernel& kernel, const KlGrid& grid, const Truncation& trunc) {
  const Eigen::Index n = grid.points.rows();
  if (n < 2) throw std::invalid_argument("kl_numeric: grid too small");
  Eigen::MatrixXd k = correlation_matrix(kernel, grid.points, grid.points);
  const Eigen::VectorXd sw = grid.weights.cwiseSqrt();
  Eigen::MatrixXd a = sw.asDiagonal() * k * sw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw std::runtime_error("kl_numeric: eigensolve failed to converge");
  // descending order
  Eigen::VectorXd lambda = es.eigenvalues().reverse();
  Eigen::MatrixXd vec = es.eigenvectors().rowwise().reverse();
  const double lead = lambda[0];
  if (lead <= 0.0) throw std::runtime_error("kl_numeric: kernel has no positive spectrum");
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < -1e-12 * lead)
      throw std::runtime_error("kl_numeric: negative eigenvalue beyond roundoff, kernel is not positive definite");
    if (lambda[i] < 0.0) lambda[i] = 0.0;
  }
  const int m = select_modes(lambda, trunc);
  Eigen::MatrixXd values = vec.leftCols(m).array().colwise() / sw.array();
  return KlBasis::nystrom(kernel, grid, lambda.head(m), std::move(values));
}

double exponential_root_residual(double w, double eps) {
  return (w * w - eps * eps) * std::tan(w) - 2.0 * eps * w;
}

namespace {

// (w^2 - eps^2) sin w - 2 eps w cos w: the pole-free form of the
// transcendental equation; roots located by bracketed bisection.
double root_function(double w, double eps) {
  return (w * w - eps * eps) * std::sin(w) - 2.0 * eps * w * std::cos(w);
}

std::vector<double> exponential_roots(double eps, std::size_t count) {
  std::vector<double> roots;
  const int per_branch = 256;
  for (int branch = 0; roots.size() < count; ++branch) {
    if (branch > 100000) throw std::runtime_error("kl_exponential_1d: root search exhausted");
    const double lo = branch * M_PI, hi = (branch + 1) * M_PI;
    double prev_w = lo + 1e-9 * (branch == 0 ? 1.0 : M_PI);
    double prev_f = root_function(prev_w, eps);
    for (int s = 1; s <= per_branch && roots.size() < count; ++s) {
      const double w = lo + (hi - lo) * s / per_branch - (s == per_branch ? 1e-12 : 0.0);
      const double f = root_function(w, eps);
      if (prev_f == 0.0 || prev_f * f < 0.0) {
        double a = prev_w, b = w, fa = prev_f;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (a + b);
          const double fm = root_function(mid, eps);
          if (fa * fm <= 0.0) {
            b = mid;
          } else {
            a = mid;
            fa = fm;
          }
        }
        const double r = 0.5 * (a + b);
        // discard the spurious roots w = 0 and w = eps (cos w = 0 case)
        const bool spurious = r < 1e-7 || (std::abs(r - eps) < 1e-10 && std::abs(std::cos(r)) < 1e-8);
        if (!spurious && (roots.empty() || r - roots.back() > 1e-9)) {
          if (std::abs(root_function(r, eps)) > 1e-9 * (1.0 + r * r))
            throw std::runtime_error("kl_exponential_1d: root refinement failed on branch " + std::to_string(branch));
          roots.push_back(r);
        }
      }
      prev_w = w;
      prev_f = f;
    }
  }
  return roots;
}

double unit_eigenvalue(double w, double eps) { return 2.0 * eps / (w * w + eps * eps); }

} // namespace

KlBasis kl_exponential_1d(double l_c, double a, double b, const Truncation& trunc) {
  if (l_c <= 0.0 || b <= a) throw std::invalid_argument("kl_exponential_1d: bad arguments");
  const double length = b - a;
  const double eps = length / l_c; // unit-interval rate after affine rescaling
  std::vector<double> roots;
  Eigen::VectorXd lambda;
  auto take = [&](std::size_t count) {
    roots = exponential_roots(eps, count);
    lambda.resize(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) lambda[static_cast<Eigen::Index>(i)] = length * unit_eigenvalue(roots[i], eps);
  };
  int m = 0;
  switch (trunc.rule) {
    case Truncation::Rule::fixed:
      take(static_cast<std::size_t>(trunc.m));
      m = trunc.m;
      break;
    case Truncation::Rule::eigenvalue_ratio: {
      std::size_t n = 8;
      for (;;) {
        take(n + 1);
        bool found = false;
        for (std::size_t i = 1; i <= n; ++i) {
          if (lambda[static_cast<Eigen::Index>(i)] / lambda[0] <= trunc.tol) {
            m = static_cast<int>(i);
            found = true;
            break;
          }
        }
        if (found) break;
        if (n > 4096) throw std::runtime_error("kl_exponential_1d: tolerance not reached");
        n *= 2;
      }
      take(static_cast<std::size_t>(m));
      break;
    }
    case Truncation::Rule::captured_variance: {
      // total variance equals the interval length exactly
      std::size_t n = 8;
      for (;;) {
        take(n);
        double cum = 0.0;
        bool found = false;
        for (std::size_t i = 0; i < n; ++i) {
          cum += lambda[static_cast<Eigen::Index>(i)];
          if (1.0 - cum / length <= trunc.tol) {
            m = static_cast<int>(i) + 1;
            found = true;
            break;
          }
        }
        if (found) break;
        if (n > 4096) throw std::runtime_error("kl_exponential_1d: tolerance not reached");
        n *= 2;
      }
      take(static_cast<std::size_t>(m));
      break;
    }
  }
  return KlBasis::analytic_exponential(l_c, a, b, std::move(roots), std::move(lambda));
}

KlBasis kl_constant(double measure) { return KlBasis::constant(measure); }

KlBasis KlBasis::nystrom(CovarianceKernel kernel, KlGrid grid, Eigen::VectorXd eigenvalues,
                         Eigen::MatrixXd values_at_grid) {
  KlBasis basis;
  basis.kind_ = Kind::nystrom;
  basis.kernel_ = kernel;
  basis.grid_ = std::move(grid);
  basis.eigenvalues_ = std::move(eigenvalues);
  basis.values_at_grid_ = std::move(values_at_grid);
  return basis;
}

KlBasis KlBasis::analytic_exponential(double l_c, double a, double b, std::vector<double> roots,
                                      Eigen::VectorXd eigenvalues) {
  KlBasis basis;
  basis.kind_ = Kind::analytic_exponential;
  basis.kernel_ = CovarianceKernel{KernelKind::exponential, l_c, 1.0};
  basis.interval_a_ = a;
  basis.interval_b_ = b;
  basis.roots_ = std::move(roots);
  basis.eigenvalues_ = std::move(eigenvalues);
  basis.grid_ = kl_grid_interval(a, b, 200, 2);
  basis.values_at_grid_ = basis.eigenfunctions_at(basis.grid_.points);
  return basis;
}

KlBasis KlBasis::constant(double measure) {
  KlBasis basis;
  basis.kind_ = Kind::constant;
  basis.kernel_ = CovarianceKernel{KernelKind::gaussian, std::numeric_limits<double>::infinity(), 1.0};
  basis.measure_ = measure;
  basis.eigenvalues_ = Eigen::VectorXd::Constant(1, measure);
  basis.grid_.points = Eigen::MatrixXd::Zero(1, 1);
  basis.grid_.weights = Eigen::VectorXd::Constant(1, measure);
  basis.values_at_grid_ = Eigen::MatrixXd::Constant(1, 1, 1.0 / std::sqrt(measure));
  return basis;
}

Eigen::MatrixXd KlBasis::eigenfunctions_at(const Eigen::MatrixXd& pts) const {
  const int m = modes();
  switch (kind_) {
    case Kind::constant:
      return Eigen::MatrixXd::Constant(pts.rows(), 1, 1.0 / std::sqrt(measure_));
    case Kind::analytic_exponential: {
      const double length = interval_b_ - interval_a_;
      const double eps = length / kernel_.correlation_length;
      Eigen::MatrixXd out(pts.rows(), m);
      for (int i = 0; i < m; ++i) {
        const double w = roots_[static_cast<std::size_t>(i)];
        const double norm = std::sqrt(0.5 * (eps * eps + w * w) +
                                      (w * w - eps * eps) * std::sin(2.0 * w) / (4.0 * w) +
                                      eps * (1.0 - std::cos(2.0 * w)) / 2.0);
        for (Eigen::Index r = 0; r < pts.rows(); ++r) {
          const double t = (pts(r, 0) - interval_a_) / length;
          out(r, i) = (w * std::cos(w * t) + eps * std::sin(w * t)) / (norm * std::sqrt(length));
        }
      }
      return out;
    }
    case Kind::nystrom: {
      // Nystrom extension phi_i(x) = (1/lambda_i) sum_q w_q K(x, x_q) phi_i(x_q)
      const Eigen::MatrixXd kx = correlation_matrix(kernel_, pts, grid_.points);
      Eigen::MatrixXd out = kx * (grid_.weights.asDiagonal() * values_at_grid_);
      for (int i = 0; i < m; ++i) {
        if (eigenvalues_[i] <= 0.0) throw std::runtime_error("KlBasis: cannot extend a zero mode");
        out.col(i) /= eigenvalues_[i];
      }
      return out;
    }
  }
  throw std::logic_error("KlBasis: unknown kind");
}

double KlBasis::completeness_defect(const Eigen::MatrixXd& pts) const {
  const Eigen::MatrixXd phi = eigenfunctions_at(pts);
  double worst = 0.0;
  for (Eigen::Index r = 0; r < pts.rows(); ++r) {
    double s = 0.0;
    for (int i = 0; i < modes(); ++i) s += eigenvalues_[i] * phi(r, i) * phi(r, i);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

double KlBasis::orthonormality_defect() const {
  const Eigen::MatrixXd g =
      values_at_grid_.transpose() * grid_.weights.asDiagonal() * values_at_grid_ -
      Eigen::MatrixXd::Identity(modes(), modes());
  return g.cwiseAbs().maxCoeff();
}

void KlBasis::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("KlBasis::save: cannot open " + path);
  out << std::setprecision(17);
  out << "wicksg-kl 1\n";
  out << "kind ";
  switch (kind_) {
    case Kind::nystrom: out << "nystrom\n"; break;
    case Kind::analytic_exponential: out << "analytic_exponential\n"; break;
    case Kind::constant: out << "constant\n"; break;
  }
  out << "kernel " << to_string(kernel_.kind) << " " << kernel_.correlation_length << " " << kernel_.sigma << "\n";
  out << "interval " << interval_a_ << " " << interval_b_ << "\n";
  out << "measure " << measure_ << "\n";
  out << "grid " << grid_.points.rows() << " " << grid_.points.cols() << "\n";
  for (Eigen::Index r = 0; r < grid_.points.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid_.points.cols(); ++c) out << grid_.points(r, c) << " ";
    out << grid_.weights[r] << "\n";
  }
  out << "modes " << modes() << "\n";
  for (int i = 0; i < modes(); ++i) {
    out << "mode " << i << " " << eigenvalues_[i];
    if (kind_ == Kind::analytic_exponential) out << " " << roots_[static_cast<std::size_t>(i)];
    out << "\n";
    for (Eigen::Index r = 0; r < values_at_grid_.rows(); ++r) out << values_at_grid_(r, i) << "\n";
  }
}

KlBasis KlBasis::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("KlBasis::load: cannot open " + path);
  auto expect = [&](const std::string& tag) {
    std::string got;
    in >> got;
    if (got != tag) throw std::runtime_error("KlBasis::load: expected '" + tag + "', got '" + got + "'");
  };
  expect("wicksg-kl");
  int version = 0;
  in >> version;
  if (version != 1) throw std::runtime_error("KlBasis::load: unsupported version");
  KlBasis basis;
  expect("kind");
  std::string kind;
  in >> kind;
  if (kind == "nystrom") basis.kind_ = Kind::nystrom;
  else if (kind == "analytic_exponential") basis.kind_ = Kind::analytic_exponential;
  else if (kind == "constant") basis.kind_ = Kind::constant;
  else throw std::runtime_error("KlBasis::load: unknown kind " + kind);
  expect("kernel");
  std::string kname;
  in >> kname >> basis.kernel_.correlation_length >> basis.kernel_.sigma;
  basis.kernel_.kind = kernel_kind_from_string(kname);
  expect("interval");
  in >> basis.interval_a_ >> basis.interval_b_;
  expect("measure");
  in >> basis.measure_;
  expect("grid");
  Eigen::Index n = 0, d = 0;
  in >> n >> d;
  basis.grid_.points.resize(n, d);
  basis.grid_.weights.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) in >> basis.grid_.points(r, c);
    in >> basis.grid_.weights[r];
  }
  expect("modes");
  int m = 0;
  in >> m;
  basis.eigenvalues_.resize(m);
  basis.values_at_grid_.resize(n, m);
  if (basis.kind_ == Kind::analytic_exponential) basis.roots_.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    expect("mode");
    int idx = 0;
    in >> idx >> basis.eigenvalues_[i];
    if (basis.kind_ == Kind::analytic_exponential) in >> basis.roots_[static_cast<std::size_t>(i)];
    for (Eigen::Index r = 0; r < n; ++r) in >> basis.values_at_grid_(r, i);
  }
  if (!in) throw std::runtime_error("KlBasis::load: truncated file");
  return basis;
}

} // namespace wicksg::rf
