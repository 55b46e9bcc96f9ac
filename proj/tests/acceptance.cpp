// Acceptance suite: end-to-end checks of the solver stack at pinned
// tolerances, one pass/fail line per criterion. Returns the number of
// failed criteria; run with --list to enumerate, --criterion K for one.

#include "wicksg/montecarlo.hpp"
#include "wicksg/operators.hpp"
#include "wicksg/solvers.hpp"

#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace wicksg;

namespace {

Eigen::VectorXd product_load(const fem::FemSpace& space) {
  return fem::assemble_load(space, [](const Eigen::VectorXd& x) {
    double f = 1.0;
    for (Eigen::Index c = 0; c < x.size(); ++c) f *= (x[c] * x[c] + 4.0 * x[c] + 1.0) * std::exp(x[c]);
    return f;
  });
}

std::shared_ptr<rf::KlBasis> kl_1d(rf::KernelKind kind, double lc, int m) {
  return std::make_shared<rf::KlBasis>(rf::kl_numeric(rf::CovarianceKernel{kind, lc, 1.0},
                                                      rf::kl_grid_interval(-1.0, 1.0, 50, 2),
                                                      rf::Truncation::fixed(m)));
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double chaos_gap(const fem::FemSpace& space, const sg::SolveReport& coupled, const sg::TriangularPropagator& prop,
                 const Eigen::VectorXd& f) {
  const Eigen::MatrixXd diff =
      sg::expansion_to_block(coupled.solution) - prop.solve(sg::load_block(f, prop.modes()));
  return fem::chaos_h1_norm(space, sg::block_to_expansion(diff, prop.basis_ptr()));
}

// ---------------------------------------------------------------------------

bool criterion_index_sets(std::string& detail) {
  const std::vector<std::tuple<int, int, int>> rows = {
      {1, 10, 11},  {3, 10, 286}, {11, 3, 364}, // 1D Gaussian table
      {2, 10, 66},  {8, 5, 1287}, {51, 2, 1378}, // 1D exponential table
      {1, 16, 17},  {4, 5, 126},  {80, 1, 81},   // 2D Gaussian table
      {3, 8, 165},  {28, 2, 435}, {86, 1, 87}};  // 2D exponential table
  std::ostringstream os;
  bool ok = true;
  for (const auto& [m, p, n] : rows) {
    const int got = chaos::build_index_set(m, p)->size();
    if (got != n) {
      ok = false;
      os << " (" << m << "," << p << ") -> " << got << " expected " << n << ";";
    }
  }
  detail = ok ? "all 12 table cardinalities exact" : os.str();
  return ok;
}

bool criterion_chaos_oracles(std::string& detail) {
  double worst_triple = 0.0, worst_expansion = 0.0, worst_moment = 0.0;
  // triple products over J_{2,4} against the tensorized quadrature oracle
  auto set = chaos::build_index_set(2, 4);
  for (int a = 0; a < set->size(); ++a) {
    for (int b = 0; b < set->size(); ++b) {
      for (int c = 0; c < set->size(); ++c) {
        const auto &ma = set->at(a), &mb = set->at(b), &mc = set->at(c);
        const double oracle = oracles::gauss_hermite_expectation(2, 12, [&](const Eigen::VectorXd& xi) {
          double v = 1.0;
          for (int d = 0; d < 2; ++d)
            v *= oracles::hermite_raw(ma[d], xi[d]) * oracles::hermite_raw(mb[d], xi[d]) *
                 oracles::hermite_raw(mc[d], xi[d]);
          return v;
        });
        worst_triple = std::max(worst_triple, std::abs(chaos::triple_product(ma, mb, mc) - oracle));
      }
    }
  }
  // product expansion coefficients against projections E[He_i He_j He_k]/k!
  for (int i = 0; i <= 4; ++i) {
    for (int j = 0; j <= 4; ++j) {
      const auto terms = chaos::product_expansion(i, j);
      for (int k = 0; k <= i + j; ++k) {
        const double oracle = oracles::gauss_hermite_expectation(1, 12, [&](const Eigen::VectorXd& xi) {
          return oracles::hermite_raw(i, xi[0]) * oracles::hermite_raw(j, xi[0]) * oracles::hermite_raw(k, xi[0]);
        }) / chaos::factorial(k);
        const auto it = terms.find(k);
        const double predicted = it == terms.end() ? 0.0 : it->second;
        worst_expansion = std::max(worst_expansion, std::abs(predicted - oracle));
      }
    }
  }
  // exact second moments against E[e^{psi.xi - sigma^2/2} He_a He_b]
  const double sigma = 0.45;
  Eigen::VectorXd psi(2);
  psi << sigma * std::cos(0.7), sigma * std::sin(0.7);
  for (int i = 0; i < set->size(); ++i) {
    for (int j = i; j < set->size(); ++j) {
      const auto &a = set->at(i), &b = set->at(j);
      const double oracle = oracles::gauss_hermite_expectation(2, 40, [&](const Eigen::VectorXd& xi) {
        return std::exp(psi.dot(xi) - 0.5 * sigma * sigma) * oracles::hermite_raw(a[0], xi[0]) *
               oracles::hermite_raw(a[1], xi[1]) * oracles::hermite_raw(b[0], xi[0]) *
               oracles::hermite_raw(b[1], xi[1]);
      });
      worst_moment = std::max(worst_moment, std::abs(rf::exact_second_moment(psi, 1.0, a, b) - oracle));
    }
  }
  std::ostringstream os;
  os << "max errors: triple " << worst_triple << ", expansion " << worst_expansion << ", moment " << worst_moment;
  detail = os.str();
  return worst_triple < 1e-9 && worst_expansion < 1e-9 && worst_moment < 1e-9;
}

bool criterion_spd(std::string& detail) {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 7, 4); // N_x = 27
  const rf::LognormalCoefficient a(kl_1d(rf::KernelKind::gaussian, 2.0, 2), 0.6);
  auto basis = chaos::build_index_set(2, 3);
  const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis);
  const Eigen::MatrixXd k = sg::densify(op, nullptr);
  const double asym = (k - k.transpose()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (k + k.transpose()));
  const double lmin = es.eigenvalues().minCoeff();
  std::ostringstream os;
  os << "dim " << k.rows() << ", min eigenvalue " << lmin << ", asymmetry " << asym;
  detail = os.str();
  return lmin > 0.0 && asym < 1e-12 * k.cwiseAbs().maxCoeff();
}

bool criterion_sigma_scaling(std::string& detail) {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 25, 4);
  const Eigen::VectorXd f = product_load(space);
  auto kl = kl_1d(rf::KernelKind::gaussian, 2.0, 3);
  auto basis = chaos::build_index_set(3, 8);
  std::vector<double> ls, lg;
  for (double sigma : {0.1, 0.2, 0.4}) {
    const rf::LognormalCoefficient a(kl, sigma);
    const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis);
    const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
    sg::SolverOptions opts;
    opts.tol = 1e-11;
    opts.max_iter = 150;
    const sg::SolveReport rep = sg::gmres_preconditioned(op, prop, f, opts);
    if (!rep.converged) {
      detail = "coupled solve did not converge";
      return false;
    }
    ls.push_back(std::log(sigma));
    lg.push_back(std::log(chaos_gap(space, rep, prop, f)));
  }
  const double slope = fit_slope(ls, lg);
  std::ostringstream os;
  os << "fitted slope " << slope << " (want 2 +- 0.2)";
  detail = os.str();
  return slope > 1.8 && slope < 2.2;
}

bool criterion_perturbation_law(std::string& detail) {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 25, 4);
  const Eigen::VectorXd f = product_load(space);
  auto basis = chaos::build_index_set(1, 8);
  const std::vector<double> epss{0.05, 0.1, 0.2}, sigmas{0.1, 0.2, 0.4};
  Eigen::MatrixXd design(9, 3);
  Eigen::VectorXd rhs(9);
  int row = 0;
  for (double eps : epss) {
    for (double sigma : sigmas) {
      const rf::PerturbedCoefficient coeff(sigma, eps, [](double x) { return x; });
      const rf::CoefficientData data = coeff.evaluate_on(space.quad_points());
      const sg::ModelOneOperator op(space, data, basis);
      const sg::TriangularPropagator prop(space, data, basis);
      sg::SolverOptions opts;
      opts.tol = 1e-11;
      opts.max_iter = 150;
      const sg::SolveReport rep = sg::gmres_preconditioned(op, prop, f, opts);
      if (!rep.converged) {
        detail = "coupled solve did not converge";
        return false;
      }
      const double eps_r = chaos_gap(space, rep, prop, f) / fem::chaos_h1_norm(space, rep.solution);
      design(row, 0) = std::log(eps);
      design(row, 1) = std::log(sigma);
      design(row, 2) = 1.0;
      rhs(row) = std::log(eps_r);
      ++row;
    }
  }
  const Eigen::Vector3d coef = (design.transpose() * design).ldlt().solve(design.transpose() * rhs);
  std::ostringstream os;
  os << "planar fit coefficients (" << coef[0] << ", " << coef[1] << ") (want 1 and 2, each +- 0.2)";
  detail = os.str();
  return std::abs(coef[0] - 1.0) < 0.2 && std::abs(coef[1] - 2.0) < 0.2;
}

struct TableCounts {
  int gs = 0, rich = 0, gmres = 0;
  bool gs_censored = false;
};

TableCounts run_1d_row(double lc, double sigma, int m, int p) {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 25, 4);
  const Eigen::VectorXd f = product_load(space);
  const rf::LognormalCoefficient a(kl_1d(rf::KernelKind::gaussian, lc, m), sigma);
  auto basis = chaos::build_index_set(m, p);
  const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis, rf::MomentForm::truncated_field);
  const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
  sg::SolverOptions opts; // tol 1e-3, gamma 1/(1+3 sigma^2), model-II guess
  TableCounts out;
  const sg::SolveReport gs = sg::block_gauss_seidel(op, f, opts);
  out.gs = gs.iterations;
  out.gs_censored = !gs.converged;
  out.rich = sg::richardson_preconditioned(op, prop, f, opts).iterations;
  sg::SolverOptions gopts = opts;
  gopts.max_iter = 200;
  out.gmres = sg::gmres_preconditioned(op, prop, f, gopts).iterations;
  return out;
}

bool criterion_precond_table(std::string& detail) {
  struct Row {
    double lc, sigma;
    int m, p, gs_ref, rich_ref, gmres_ref; // gs_ref < 0 means "> 100"
  };
  const std::vector<Row> rows = {
      {20, 0.2, 1, 10, 3, 0, 0},  {20, 0.6, 1, 10, 27, 0, 0},  {20, 1.0, 1, 10, -1, 22, 5},
      {2, 0.2, 3, 10, 3, 1, 1},   {2, 0.6, 3, 10, 22, 3, 1},   {2, 1.0, 3, 10, -1, 19, 9},
      {0.2, 0.2, 11, 3, 3, 1, 1}, {0.2, 0.6, 11, 3, 10, 5, 5}, {0.2, 1.0, 11, 3, 29, 12, 9}};
  bool ok = true;
  std::ostringstream os;
  for (const Row& r : rows) {
    const TableCounts c = run_1d_row(r.lc, r.sigma, r.m, r.p);
    os << "[lc=" << r.lc << " s=" << r.sigma << ": gs=" << (c.gs_censored ? ">" : "") << c.gs << " rich=" << c.rich
       << " gmres=" << c.gmres << "] ";
    if (std::abs(c.gmres - r.gmres_ref) > 2) {
      ok = false;
      os << "GMRES off ";
    }
    if (std::abs(c.rich - r.rich_ref) > 5) {
      ok = false;
      os << "Richardson off ";
    }
    if (r.sigma <= 0.6 && !(c.gmres <= c.rich && c.rich <= c.gs)) {
      ok = false;
      os << "ordering broken ";
    }
    if (r.sigma == 1.0 && r.lc >= 2.0 && !c.gs_censored) {
      ok = false;
      os << "GS should exceed the cap ";
    }
  }
  detail = os.str();
  return ok;
}

bool criterion_bessel_table(std::string& detail) {
  const int rich_ref[5][5] = {{5, 6, 5, 6, 6},
                                {10, 10, 11, 10, 10},
                                {14, 16, 17, 18, 19},
                                {16, 19, 21, 23, 25},
                                {16, 19, 21, 24, 26}};
  const int gmres_ref[5][5] = {{3, 3, 4, 4, 4}, {3, 4, 5, 6, 7}, {4, 5, 6, 7, 8}, {5, 6, 7, 8, 9}, {5, 7, 8, 9, 11}};
  const fem::FemSpace space = fem::FemSpace::rectangle({0.0, 0.0}, {1.0, 1.0}, 32, 32, 2);
  const Eigen::VectorXd f = fem::assemble_load(space, Eigen::VectorXd::Ones(space.quad_weights().size()));
  const auto kl = std::make_shared<rf::KlBasis>(
      rf::kl_numeric(rf::CovarianceKernel{rf::KernelKind::bessel_matern, 1.0, 1.0},
                     rf::kl_grid_rectangle({0.0, 0.0}, {1.0, 1.0}, 16, 16, 2), rf::Truncation::fixed(5)));
  bool ok = true;
  std::ostringstream os;
  int gmres_in = 0, rich_in = 0, worst_dr = 0, worst_dg = 0;
  const double sigmas[5] = {0.2, 0.4, 0.6, 0.8, 1.0};
  for (int si = 0; si < 5; ++si) {
    for (int p = 1; p <= 5; ++p) {
      const rf::LognormalCoefficient a(kl, sigmas[si]);
      auto basis = chaos::build_index_set(5, p);
      const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis, rf::MomentForm::truncated_field);
      const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
      sg::SolverOptions opts;
      opts.tol = 1e-8;
      opts.max_iter = 100;
      const int rich = sg::richardson_preconditioned(op, prop, f, opts).iterations;
      const int gmres = sg::gmres_preconditioned(op, prop, f, opts).iterations;
      const int dr = rich - rich_ref[si][p - 1];
      const int dg = gmres - gmres_ref[si][p - 1];
      if (std::abs(dr) > std::abs(worst_dr)) worst_dr = dr;
      if (std::abs(dg) > std::abs(worst_dg)) worst_dg = dg;
      if (std::abs(dr) <= 4) ++rich_in; else ok = false;
      if (std::abs(dg) <= 2) ++gmres_in; else ok = false;
      os << "[s=" << sigmas[si] << " p=" << p << ": R " << rich << " (ref " << rich_ref[si][p - 1] << "), G "
         << gmres << " (ref " << gmres_ref[si][p - 1] << ")] ";
    }
  }
  os << "-- GMRES within +-2: " << gmres_in << "/25 (worst delta " << worst_dg << "); Richardson within +-4: "
     << rich_in << "/25 (worst delta " << worst_dr << ")";
  detail = os.str();
  return ok;
}

bool criterion_variance_reduction(std::string& detail) {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 25, 4);
  const Eigen::VectorXd f = product_load(space);
  const auto kl =
      std::make_shared<rf::KlBasis>(rf::kl_exponential_1d(1.0, -1.0, 1.0, rf::Truncation::fixed(12)));
  auto basis = chaos::build_index_set(12, 4);
  std::vector<double> ls, lv, lp;
  bool ratios_ok = true;
  std::ostringstream os;
  for (double sigma : {0.2, 0.4, 0.8}) {
    const rf::LognormalCoefficient a(kl, sigma);
    const auto u2 = sg::solve_model2(space, a.wick_inverse(), basis, f);
    const mc::McConfig cfg{2000, 20180816, 1.0};
    const mc::McEstimate plain = mc::mc_plain(space, a, f, cfg);
    const mc::McEstimate cv = mc::mc_control_variate(space, a, u2, f, cfg);
    const auto rep = mc::variance_reduction_report(space, plain, cv);
    ls.push_back(std::log(sigma));
    lv.push_back(std::log(rep.int_var_cv));
    lp.push_back(std::log(rep.int_var_plain));
    ratios_ok = ratios_ok && rep.ratio_l2 < 1.0 && rep.ratio_h1 < 1.0;
    os << "[s=" << sigma << " ratioL2=" << rep.ratio_l2 << " ratioH1=" << rep.ratio_h1 << "]";
  }
  const double slope = fit_slope(ls, lv);
  const double plain_slope = fit_slope(ls, lp);
  os << " cv-variance slope " << slope << " (gate [3.2, 4.8]); plain slope " << plain_slope
     << ", ratio slope " << slope - plain_slope
     << ". Note: the quadratic-in-sigma standard-deviation reduction shows up in the ratio slope of about 4; "
        "the absolute variance decays faster because the leading model gap is deterministic.";
  detail = os.str();
  return ratios_ok && slope > 3.2 && slope < 4.8;
}

bool criterion_equivalence_limit(std::string& detail) {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 25, 4);
  const Eigen::VectorXd f = product_load(space);
  const auto kl = std::make_shared<rf::KlBasis>(rf::kl_constant(2.0));
  const rf::LognormalCoefficient a(kl, 0.5);
  auto basis = chaos::build_index_set(1, 12);
  const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis);
  const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
  sg::SolverOptions opts;
  opts.tol = 1e-10;
  opts.max_iter = 150;
  const sg::SolveReport rep = sg::gmres_preconditioned(op, prop, f, opts);
  if (!rep.converged) {
    detail = "coupled solve did not converge";
    return false;
  }
  const double rel = chaos_gap(space, rep, prop, f) / fem::chaos_h1_norm(space, rep.solution);
  std::ostringstream os;
  os << "relative gap " << rel << " (want <= 1e-6)";
  detail = os.str();
  return rel <= 1e-6;
}

bool criterion_fem_orders(std::string& detail) {
  std::ostringstream os;
  bool ok = true;
  auto mms_1d = [](int n, int q) {
    const fem::FemSpace s = fem::FemSpace::interval(0.0, 1.0, n, q);
    const Eigen::VectorXd u = fem::solve_deterministic(
        fem::assemble_stiffness(s, Eigen::VectorXd::Ones(s.quad_weights().size())),
        fem::assemble_load(s, [](const Eigen::VectorXd& x) { return M_PI * M_PI * std::sin(M_PI * x[0]); }));
    return fem::l2_error(s, u, [](const Eigen::VectorXd& x) { return std::sin(M_PI * x[0]); });
  };
  auto mms_2d = [](int n, int q) {
    const fem::FemSpace s = fem::FemSpace::rectangle({0.0, 0.0}, {1.0, 1.0}, n, n, q);
    const Eigen::VectorXd u = fem::solve_deterministic(
        fem::assemble_stiffness(s, Eigen::VectorXd::Ones(s.quad_weights().size())),
        fem::assemble_load(s, [](const Eigen::VectorXd& x) {
          return 2.0 * M_PI * M_PI * std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]);
        }));
    return fem::l2_error(s, u, [](const Eigen::VectorXd& x) { return std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]); });
  };
  for (int q = 1; q <= 2; ++q) {
    const double r1 = mms_1d(8, q) / mms_1d(16, q);
    const double r2 = mms_2d(8, q) / mms_2d(16, q);
    const double want = std::pow(2.0, q + 1);
    os << "[q=" << q << ": 1D ratio " << r1 << ", 2D ratio " << r2 << ", want " << want << "] ";
    ok = ok && std::abs(r1 / want - 1.0) < 0.15 && std::abs(r2 / want - 1.0) < 0.15;
  }
  detail = os.str();
  return ok;
}

struct Criterion {
  int id;
  const char* title;
  bool (*fn)(std::string&);
};

const Criterion kCriteria[] = {
    {1, "index-set cardinalities match the reference tables", &criterion_index_sets},
    {2, "chaos algebra agrees with quadrature oracles to 1e-9", &criterion_chaos_oracles},
    {3, "coupled Galerkin matrix is symmetric positive definite", &criterion_spd},
    {4, "model difference scales as sigma^2 (slope 2 +- 0.2)", &criterion_sigma_scaling},
    {5, "perturbation law log(eps_r) = log(eps) + 2 log(sigma) + C", &criterion_perturbation_law},
    {6, "1D Gaussian preconditioning table reproduced within bands", &criterion_precond_table},
    {7, "Bessel-kernel 2D iteration grid reproduced within bands", &criterion_bessel_table},
    {8, "control-variate variance scales as sigma^4, ratio < 1", &criterion_variance_reduction},
    {9, "flat-coefficient models coincide to 1e-6", &criterion_equivalence_limit},
    {10, "manufactured-solution convergence orders q+1", &criterion_fem_orders},
};

} // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--list") == 0) {
      for (const auto& c : kCriteria) std::cout << c.id << ": " << c.title << "\n";
      return 0;
    }
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  int failures = 0;
  for (const auto& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.fn(detail);
    } catch (const std::exception& err) {
      detail = std::string("exception: ") + err.what();
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": " << c.title << " (" << detail << ") ["
              << dt << " s]" << std::endl;
    if (!ok) ++failures;
  }
  return failures;
}
