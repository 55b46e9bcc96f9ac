#include "wicksg/operators.hpp"
#include "wicksg/solvers.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace wicksg;
using chaos::MultiIndex;

namespace {

std::shared_ptr<rf::KlBasis> gaussian_basis(double lc, int m, double a = -1.0, double b = 1.0) {
  return std::make_shared<rf::KlBasis>(rf::kl_numeric(rf::CovarianceKernel{rf::KernelKind::gaussian, lc, 1.0},
                                                      rf::kl_grid_interval(a, b, 50, 2), rf::Truncation::fixed(m)));
}

Eigen::MatrixXd random_block(int n, int nx, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd u(n, nx);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < nx; ++j) u(i, j) = unif(gen);
  return u;
}

double dot_block(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a.array() * b.array()).sum(); }

} // namespace

TEST_CASE("mean-field reduction at p = 0") {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 10, 2);
  const rf::LognormalCoefficient a(gaussian_basis(1.0, 1), 0.7);
  auto basis = chaos::build_index_set(1, 0);
  const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis);
  const fem::SpMat s = fem::assemble_stiffness(space, Eigen::VectorXd::Ones(space.quad_weights().size()));
  const Eigen::MatrixXd u = random_block(1, space.n_dof(), 1);
  const Eigen::MatrixXd y = op.apply(u);
  const Eigen::VectorXd ref = s * u.row(0).transpose();
  CHECK((y.row(0).transpose() - ref).cwiseAbs().maxCoeff() < 1e-12 * ref.cwiseAbs().maxCoeff());
}

TEST_CASE("operator symmetry") {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 8, 3);
  const rf::LognormalCoefficient a(gaussian_basis(2.0, 2), 0.6);
  auto basis = chaos::build_index_set(2, 3);
  const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis);
  const Eigen::MatrixXd v = random_block(op.modes(), op.n_dof(), 2);
  const Eigen::MatrixXd w = random_block(op.modes(), op.n_dof(), 3);
  const double left = dot_block(op.apply(v), w);
  const double right = dot_block(v, op.apply(w));
  CHECK(left == doctest::Approx(right).epsilon(1e-12));
}

TEST_CASE("exact operator equals dense Kronecker oracle") {
  const fem::FemSpace space = fem::FemSpace::interval(0.0, 1.0, 5, 2); // N_x = 9
  auto kl = gaussian_basis(1.0, 2, 0.0, 1.0);
  const rf::LognormalCoefficient a(kl, 0.5);
  auto basis = chaos::build_index_set(2, 2); // N = 6
  const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis);

  // dense sum_delta C_delta (x) S_delta over all delta with |delta| <= 2p,
  // built from raw triple products and per-term stiffness assembly
  const int n = basis->size(), nx = space.n_dof();
  auto coeff_set = chaos::build_index_set(2, 4);
  const rf::CoefficientData data = a.evaluate_on(space.quad_points());
  const Eigen::MatrixXd mono = sg::monomial_table(*coeff_set, data.psi);
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n * nx, n * nx);
  for (int d = 0; d < coeff_set->size(); ++d) {
    const Eigen::MatrixXd s =
        Eigen::MatrixXd(fem::assemble_stiffness(space, Eigen::VectorXd(mono.col(d) / coeff_set->factorial(d))));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double c = chaos::triple_product(coeff_set->at(d), basis->at(i), basis->at(j)) /
                         std::sqrt(basis->factorial(i) * basis->factorial(j));
        if (c == 0.0) continue;
        for (int m = 0; m < nx; ++m)
          for (int q = 0; q < nx; ++q) dense(i + n * m, j + n * q) += c * s(m, q);
      }
    }
  }

  CHECK(op.apply(Eigen::MatrixXd::Zero(n, nx)).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::MatrixXd u = random_block(n, nx, 4);
  const Eigen::MatrixXd y = op.apply(u);
  const Eigen::VectorXd yref = dense * Eigen::Map<const Eigen::VectorXd>(u.data(), n * nx);
  CHECK((Eigen::Map<const Eigen::VectorXd>(y.data(), n * nx) - yref).cwiseAbs().maxCoeff() <
        1e-12 * yref.cwiseAbs().maxCoeff());

  // densify agrees entry-wise too
  const Eigen::MatrixXd k = sg::densify(op, nullptr);
  CHECK((k - dense).cwiseAbs().maxCoeff() < 1e-12 * dense.cwiseAbs().maxCoeff());
}

TEST_CASE("tensor-form operator matches the exact one at p_hat = 2p") {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 6, 2);
  const rf::LognormalCoefficient a(gaussian_basis(2.0, 2), 0.6);
  for (int p = 1; p <= 3; ++p) {
    auto basis = chaos::build_index_set(2, p);
    const sg::ModelOneOperator exact = sg::assemble_model1(space, a, basis);
    const sg::ModelOneTensorOperator tensor = sg::assemble_model1_tensor(space, a, basis, 2 * p);
    const Eigen::MatrixXd u = random_block(basis->size(), space.n_dof(), 7 + p);
    const Eigen::MatrixXd ye = exact.apply(u);
    const Eigen::MatrixXd yt = tensor.apply(u);
    CHECK((ye - yt).cwiseAbs().maxCoeff() < 1e-10 * ye.cwiseAbs().maxCoeff());
  }
  auto basis = chaos::build_index_set(2, 2);
  CHECK_THROWS_AS(sg::assemble_model1_tensor(space, a, basis, -1), std::invalid_argument);
  CHECK_THROWS_AS(sg::assemble_model1_tensor(space, a, basis, 5), std::invalid_argument);
  // truncating below 2p changes the operator
  const sg::ModelOneTensorOperator low = sg::assemble_model1_tensor(space, a, basis, 1);
  const sg::ModelOneOperator exact = sg::assemble_model1(space, a, basis);
  const Eigen::MatrixXd u = random_block(basis->size(), space.n_dof(), 11);
  CHECK((low.apply(u) - exact.apply(u)).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("second-moment forms") {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 8, 2);
  auto basis = chaos::build_index_set(1, 4);
  // complete basis: both forms coincide
  const auto klc = std::make_shared<rf::KlBasis>(rf::kl_constant(2.0));
  const rf::LognormalCoefficient flat(klc, 0.6);
  const Eigen::MatrixXd u = random_block(basis->size(), space.n_dof(), 31);
  const Eigen::MatrixXd y_full = sg::assemble_model1(space, flat, basis, rf::MomentForm::full_field).apply(u);
  const Eigen::MatrixXd y_trunc =
      sg::assemble_model1(space, flat, basis, rf::MomentForm::truncated_field).apply(u);
  CHECK((y_full - y_trunc).cwiseAbs().maxCoeff() < 1e-13 * y_full.cwiseAbs().maxCoeff());

  // incomplete basis: the truncated-field form shrinks the operator by the
  // pointwise factor e^{(|psi|^2 - sigma^2)/2} < 1
  const rf::LognormalCoefficient a(gaussian_basis(0.5, 1), 0.6);
  const sg::ModelOneOperator full = sg::assemble_model1(space, a, basis, rf::MomentForm::full_field);
  const sg::ModelOneOperator trunc = sg::assemble_model1(space, a, basis, rf::MomentForm::truncated_field);
  const Eigen::MatrixXd yf = full.apply(u), yt = trunc.apply(u);
  CHECK((yf - yt).cwiseAbs().maxCoeff() > 1e-6 * yf.cwiseAbs().maxCoeff());
  const double qf = (u.array() * yf.array()).sum(), qt = (u.array() * yt.array()).sum();
  CHECK(qt < qf);
  CHECK(qt > 0.0);
}

TEST_CASE("coupled operator is positive definite") {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 7, 2); // N_x = 13
  const rf::LognormalCoefficient a(gaussian_basis(2.0, 2), 0.8);
  auto basis = chaos::build_index_set(2, 3);
  const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis);
  const Eigen::MatrixXd k = sg::densify(op, nullptr);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (k + k.transpose()));
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("decoupled solve") {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 25, 4);
  const Eigen::VectorXd f = fem::assemble_load(space, [](const Eigen::VectorXd& x) {
    return (x[0] * x[0] + 4.0 * x[0] + 1.0) * std::exp(x[0]);
  });

  SUBCASE("zero variance reduces to the deterministic problem") {
    const rf::LognormalCoefficient a(gaussian_basis(2.0, 2), 0.0);
    auto basis = chaos::build_index_set(2, 3);
    const auto u = sg::solve_model2(space, a.wick_inverse(), basis, f);
    const Eigen::VectorXd udet = fem::solve_deterministic(
        fem::assemble_stiffness(space, Eigen::VectorXd::Ones(space.quad_weights().size())), f);
    CHECK((u.coeff[0] - udet).cwiseAbs().maxCoeff() < 1e-10 * udet.cwiseAbs().maxCoeff());
    for (int i = 1; i < u.size(); ++i) CHECK(u.coeff[static_cast<std::size_t>(i)].cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("flat coefficient reproduces the Wick-division series") {
    const double sigma = 0.5;
    const auto kl = std::make_shared<rf::KlBasis>(rf::kl_constant(2.0));
    const rf::LognormalCoefficient a(kl, sigma);
    auto basis = chaos::build_index_set(1, 8);
    const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
    const auto u = sg::block_to_expansion(prop.solve(sg::load_block(f, basis->size())), basis);
    CHECK(prop.factorization_count() == 1);
    CHECK(prop.substitution_count() == basis->size());
    const Eigen::VectorXd udet = fem::solve_deterministic(
        fem::assemble_stiffness(space, Eigen::VectorXd::Ones(space.quad_weights().size())), f);
    // a^{-1} = e^{sigma^2} e^{diamond(-sigma xi)}: He_n coefficient e^{sigma^2} (-sigma)^n/n!
    for (int n = 0; n < u.size(); ++n) {
      const double cn = std::exp(sigma * sigma) * std::pow(-sigma, n) / chaos::factorial(n);
      CHECK((u.coeff[static_cast<std::size_t>(n)] - cn * udet).cwiseAbs().maxCoeff() <
            1e-10 * std::abs(cn) * udet.cwiseAbs().maxCoeff());
    }
  }

  SUBCASE("inverse application round trip and triangular structure") {
    const rf::LognormalCoefficient a(gaussian_basis(2.0, 3), 0.6);
    auto basis = chaos::build_index_set(3, 3);
    const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
    const Eigen::MatrixXd v = random_block(basis->size(), space.n_dof(), 21);
    const Eigen::MatrixXd round = prop.solve(prop.apply(v));
    CHECK((round - v).cwiseAbs().maxCoeff() < 1e-10 * v.cwiseAbs().maxCoeff());

    const auto direct = sg::solve_model2(space, a.wick_inverse(), basis, f);
    const Eigen::MatrixXd via_inverse = prop.solve(sg::load_block(f, basis->size()));
    const Eigen::MatrixXd direct_block = sg::expansion_to_block(direct);
    CHECK((via_inverse - direct_block).cwiseAbs().maxCoeff() < 1e-12 * direct_block.cwiseAbs().maxCoeff());

    // mode gamma of the solution ignores load modes above gamma
    Eigen::MatrixXd b = sg::load_block(f, basis->size());
    Eigen::MatrixXd b2 = b;
    const int cutoff = 4;
    for (int g = cutoff; g < basis->size(); ++g) b2.row(g) += random_block(1, space.n_dof(), 30 + g);
    const Eigen::MatrixXd u1 = prop.solve(b);
    const Eigen::MatrixXd u2 = prop.solve(b2);
    for (int g = 0; g < cutoff; ++g)
      CHECK((u1.row(g) - u2.row(g)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((u1.bottomRows(basis->size() - cutoff) - u2.bottomRows(basis->size() - cutoff)).cwiseAbs().maxCoeff() >
          0.0);
  }

  SUBCASE("wick-inverse flag is enforced") {
    const rf::LognormalCoefficient a(gaussian_basis(2.0, 2), 0.4);
    auto basis = chaos::build_index_set(2, 2);
    CHECK_THROWS_AS(sg::solve_model2(space, a, basis, f), std::invalid_argument);
    CHECK_THROWS_AS(sg::assemble_model1(space, a.wick_inverse(), basis), std::invalid_argument);
  }
}

TEST_CASE("iterative solvers") {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 25, 4);
  const Eigen::VectorXd f = fem::assemble_load(space, [](const Eigen::VectorXd& x) {
    return (x[0] * x[0] + 4.0 * x[0] + 1.0) * std::exp(x[0]);
  });

  SUBCASE("zero variance converges immediately") {
    const rf::LognormalCoefficient a(gaussian_basis(2.0, 2), 0.0);
    auto basis = chaos::build_index_set(2, 2);
    const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis);
    const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
    sg::SolverOptions opts;
    const auto gs = sg::block_gauss_seidel(op, f, opts);
    CHECK(gs.converged);
    CHECK(gs.iterations == 1);
    const auto rich = sg::richardson_preconditioned(op, prop, f, opts);
    CHECK(rich.converged);
    CHECK(rich.iterations == 0);
    const auto gm = sg::gmres_preconditioned(op, prop, f, opts);
    CHECK(gm.converged);
    CHECK(gm.iterations == 0);
  }

  SUBCASE("all three solvers agree") {
    const rf::LognormalCoefficient a(gaussian_basis(2.0, 2), 0.6);
    auto basis = chaos::build_index_set(2, 4);
    const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis);
    const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
    sg::SolverOptions opts;
    opts.tol = 1e-8;
    opts.max_iter = 400;
    const auto gs = sg::block_gauss_seidel(op, f, opts);
    const auto rich = sg::richardson_preconditioned(op, prop, f, opts);
    const auto gm = sg::gmres_preconditioned(op, prop, f, opts);
    REQUIRE(gs.converged);
    REQUIRE(rich.converged);
    REQUIRE(gm.converged);
    auto diff_norm = [&](const chaos::ChaosExpansion<Eigen::VectorXd>& x,
                         const chaos::ChaosExpansion<Eigen::VectorXd>& y) {
      chaos::ChaosExpansion<Eigen::VectorXd> d = x;
      for (int i = 0; i < d.size(); ++i) d.coeff[static_cast<std::size_t>(i)] -= y.coeff[static_cast<std::size_t>(i)];
      return fem::chaos_h1_norm(space, d);
    };
    const double scale = fem::chaos_h1_norm(space, gm.solution);
    CHECK(diff_norm(gs.solution, gm.solution) < 10 * opts.tol * scale);
    CHECK(diff_norm(rich.solution, gm.solution) < 10 * opts.tol * scale);
  }

  SUBCASE("restarted gmres reaches the same solution") {
    const rf::LognormalCoefficient a(gaussian_basis(2.0, 2), 0.8);
    auto basis = chaos::build_index_set(2, 3);
    const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis);
    const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
    sg::SolverOptions opts;
    opts.tol = 1e-9;
    opts.max_iter = 120;
    const auto full = sg::gmres_preconditioned(op, prop, f, opts);
    opts.restart = 4;
    const auto restarted = sg::gmres_preconditioned(op, prop, f, opts);
    REQUIRE(full.converged);
    REQUIRE(restarted.converged);
    CHECK(restarted.iterations >= full.iterations);
    const Eigen::MatrixXd diff =
        sg::expansion_to_block(full.solution) - sg::expansion_to_block(restarted.solution);
    CHECK(fem::chaos_h1_norm(space, sg::block_to_expansion(diff, basis)) <
          1e-6 * fem::chaos_h1_norm(space, full.solution));
  }

  SUBCASE("gmres residual history is non-increasing") {
    const rf::LognormalCoefficient a(gaussian_basis(2.0, 3), 1.0);
    auto basis = chaos::build_index_set(3, 3);
    const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis);
    const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
    sg::SolverOptions opts;
    opts.tol = 1e-10;
    opts.max_iter = 60;
    const auto gm = sg::gmres_preconditioned(op, prop, f, opts);
    for (std::size_t i = 1; i < gm.residual_history.size(); ++i)
      CHECK(gm.residual_history[i] <= gm.residual_history[i - 1] * (1.0 + 1e-12));
  }

  SUBCASE("richardson diverges with an oversized step and reports it") {
    const rf::LognormalCoefficient a(gaussian_basis(2.0, 2), 0.8);
    auto basis = chaos::build_index_set(2, 3);
    const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis);
    const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
    sg::SolverOptions opts;
    opts.gamma = 50.0;
    opts.initial = sg::SolverOptions::Initial::zero;
    const auto rich = sg::richardson_preconditioned(op, prop, f, opts);
    CHECK_FALSE(rich.converged);
  }

  SUBCASE("richardson step bound gamma < 2/rho") {
    const fem::FemSpace tiny = fem::FemSpace::interval(-1.0, 1.0, 6, 2);
    const Eigen::VectorXd ft = fem::assemble_load(tiny, [](const Eigen::VectorXd& x) { return 1.0 + x[0]; });
    const rf::LognormalCoefficient a(gaussian_basis(2.0, 1), 0.7);
    auto basis = chaos::build_index_set(1, 4);
    const sg::ModelOneOperator op = sg::assemble_model1(tiny, a, basis);
    const sg::TriangularPropagator prop = sg::assemble_model2(tiny, a.wick_inverse(), basis);
    const Eigen::MatrixXd k = sg::densify(op, &prop);
    const Eigen::Index dim = k.rows();
    const double rho = Eigen::EigenSolver<Eigen::MatrixXd>(k).eigenvalues().cwiseAbs().maxCoeff();
    // the spectral statement: the iteration matrix contracts iff gamma < 2/rho
    auto iter_radius = [&](double gamma) {
      const Eigen::MatrixXd t = Eigen::MatrixXd::Identity(dim, dim) - gamma * k;
      return Eigen::EigenSolver<Eigen::MatrixXd>(t).eigenvalues().cwiseAbs().maxCoeff();
    };
    CHECK(iter_radius(1.8 / rho) < 1.0);
    CHECK(iter_radius(2.6 / rho) > 1.0);
    // end-to-end at a moderate step (the preconditioned operator is strongly
    // non-normal, so near-critical steps show large transients)
    sg::SolverOptions opts;
    opts.tol = 1e-6;
    opts.max_iter = 1000;
    opts.gamma = 1.0 / rho;
    CHECK(sg::richardson_preconditioned(op, prop, ft, opts).converged);
    opts.gamma = 2.6 / rho;
    opts.initial = sg::SolverOptions::Initial::zero;
    opts.max_iter = 200;
    CHECK_FALSE(sg::richardson_preconditioned(op, prop, ft, opts).converged);
  }
}

TEST_CASE("condition number of the preconditioned operator") {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 6, 2); // N_x = 11
  auto basis = chaos::build_index_set(1, 6);
  auto kl = gaussian_basis(2.0, 1);

  const rf::LognormalCoefficient a0(kl, 0.0);
  const sg::ModelOneOperator op0 = sg::assemble_model1(space, a0, basis);
  const sg::TriangularPropagator prop0 = sg::assemble_model2(space, a0.wick_inverse(), basis);
  CHECK(sg::condition_estimate(op0, prop0) == doctest::Approx(1.0).epsilon(1e-10));

  auto kappa = [&](double sigma) {
    const rf::LognormalCoefficient a(kl, sigma);
    const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis);
    const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
    return sg::condition_estimate(op, prop);
  };
  const double k1 = kappa(0.2), k2 = kappa(0.4);
  CHECK(k1 >= 1.0);
  CHECK(k2 >= 1.0);
  const double ratio = (k2 - 1.0) / (k1 - 1.0);
  CHECK(ratio > 2.0); // quadratic growth of kappa - 1, within 50 percent
  CHECK(ratio < 6.0);

  // size guard
  CHECK_THROWS_AS(sg::condition_estimate(op0, prop0, 10), std::invalid_argument);
}

TEST_CASE("model difference scales quadratically in sigma") {
  const fem::FemSpace space = fem::FemSpace::interval(-1.0, 1.0, 10, 3);
  auto kl = gaussian_basis(2.0, 2);
  auto basis = chaos::build_index_set(2, 6);
  const Eigen::VectorXd f = fem::assemble_load(space, [](const Eigen::VectorXd& x) {
    return (x[0] * x[0] + 4.0 * x[0] + 1.0) * std::exp(x[0]);
  });
  std::vector<double> sigmas{0.1, 0.2, 0.4}, gaps;
  for (double sigma : sigmas) {
    const rf::LognormalCoefficient a(kl, sigma);
    const sg::ModelOneOperator op = sg::assemble_model1(space, a, basis);
    const sg::TriangularPropagator prop = sg::assemble_model2(space, a.wick_inverse(), basis);
    sg::SolverOptions opts;
    opts.tol = 1e-11;
    opts.max_iter = 100;
    const auto rep = sg::gmres_preconditioned(op, prop, f, opts);
    REQUIRE(rep.converged);
    const Eigen::MatrixXd diff =
        sg::expansion_to_block(rep.solution) - prop.solve(sg::load_block(f, basis->size()));
    gaps.push_back(fem::chaos_h1_norm(space, sg::block_to_expansion(diff, basis)));
  }
  const double slope = std::log(gaps[2] / gaps[0]) / std::log(sigmas[2] / sigmas[0]);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
}
