#ifndef WICKSG_SOLVERS_HPP
#define WICKSG_SOLVERS_HPP

#include "wicksg/operators.hpp"

#include <vector>

namespace wicksg::sg {

struct SolverOptions {
  double tol = 1e-3;
  int max_iter = 100;
  /// Richardson relaxation; non-positive selects the default 1/(1 + 3 sigma^2).
  double gamma = 0.0;
  /// GMRES restart length; non-positive keeps the full Krylov basis.
  int restart = 0;
  enum class Initial { zero, model2 };
  Initial initial = Initial::model2;
  /// Richardson stopping residual: preconditioned A_II^{-1}(f - A_I u) or plain f - A_I u.
  enum class ResidualNorm { preconditioned, plain };
  ResidualNorm residual = ResidualNorm::preconditioned;
};

struct SolveReport {
  chaos::ChaosExpansion<Eigen::VectorXd> solution;
  int iterations = 0;
  std::vector<double> residual_history; ///< relative residuals, one per iteration
  bool converged = false;
  double wall_time_s = 0.0;
};

/// Block Gauss-Seidel on the exact Model-I operator. Diagonal blocks are the
/// assembled E[a He_g^2] stiffness matrices; zero initial guess; stops on the
/// plain relative residual.
SolveReport block_gauss_seidel(const ModelOneOperator& op, const Eigen::VectorXd& f_load,
                               const SolverOptions& opts);

/// Preconditioned Richardson iteration u <- u + gamma A_II^{-1}(f - A_I u),
/// Model-II initial guess by default; iteration count excludes the guess and
/// is zero when the guess already meets the tolerance.
SolveReport richardson_preconditioned(const BlockOperator& op, const TriangularPropagator& prop,
                                      const Eigen::VectorXd& f_load, const SolverOptions& opts);

/// Left-preconditioned GMRES on A_II^{-1} A_I u = A_II^{-1} f with the
/// relative preconditioned residual as the stopping measure.
SolveReport gmres_preconditioned(const BlockOperator& op, const TriangularPropagator& prop,
                                 const Eigen::VectorXd& f_load, const SolverOptions& opts);

/// Dense matrix of the operator (or of A_II^{-1} A_I when prop is given);
/// guarded by max_dimension. Diagnostic use only.
Eigen::MatrixXd densify(const BlockOperator& op, const TriangularPropagator* prop, int max_dimension = 2500);

/// kappa(A_II^{-1} A_I) from extreme singular values of the densified
/// preconditioned operator.
double condition_estimate(const BlockOperator& op, const TriangularPropagator& prop, int max_dimension = 2500);

} // namespace wicksg::sg

#endif
