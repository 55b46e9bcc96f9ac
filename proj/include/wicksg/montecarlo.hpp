#ifndef WICKSG_MONTECARLO_HPP
#define WICKSG_MONTECARLO_HPP

#include "wicksg/fem.hpp"
#include "wicksg/lognormal.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace wicksg::mc {

/// Deterministic per-index Gaussian sample vectors: sample i depends only on
/// (m, seed, i), so parallel schedules cannot change the stream.
class SampleStream {
public:
  SampleStream(int m, std::uint64_t seed);
  Eigen::VectorXd sample(std::int64_t i) const;
  int dimension() const { return m_; }
  std::uint64_t seed() const { return seed_; }

private:
  int m_;
  std::uint64_t seed_;
};

std::vector<Eigen::VectorXd> draw_samples(int m, int n_samples, std::uint64_t seed);

struct McConfig {
  int n_samples = 10000;
  std::uint64_t seed = 0;
  double cv_alpha = 1.0;
};

enum class EstimatorKind { plain, control_variate };

struct McEstimate {
  Eigen::VectorXd mean;     ///< nodal mean field
  Eigen::VectorXd variance; ///< nodal variance field, divisor n-1
  EstimatorKind kind = EstimatorKind::plain;
  int n_samples = 0;
  std::uint64_t seed = 0;
};

/// Plain Monte Carlo for the classical model: per sample assemble the sampled
/// coefficient, solve, and accumulate streaming moments.
McEstimate mc_plain(const fem::FemSpace& space, const rf::LognormalCoefficient& coeff,
                    const Eigen::VectorXd& f_load, const McConfig& cfg);

/// Control-variate estimator driven by the decoupled-model chaos surrogate:
/// per sample u_tilde = u_I - alpha (u_II(xi) - u_II_mean), sharing the xi
/// stream with the plain sampler.
McEstimate mc_control_variate(const fem::FemSpace& space, const rf::LognormalCoefficient& coeff,
                              const chaos::ChaosExpansion<Eigen::VectorXd>& u2_chaos,
                              const Eigen::VectorXd& f_load, const McConfig& cfg);

struct VarianceReductionReport {
  double int_var_plain = 0.0; ///< integral of the plain variance field
  double int_var_cv = 0.0;
  double h1_var_plain = 0.0;  ///< H^1 seminorm of the variance field
  double h1_var_cv = 0.0;
  double ratio_l2 = 0.0;
  double ratio_h1 = 0.0;
  double estimator_variance_cv = 0.0; ///< int_var_cv / n_samples
};

VarianceReductionReport variance_reduction_report(const fem::FemSpace& space, const McEstimate& plain,
                                                  const McEstimate& cv);

/// Sample-optimal control-variate coefficient cov(u_I, u_II)/var(u_II) from
/// paired probe values; diagnostic only.
double estimate_optimal_alpha(const std::vector<double>& u1, const std::vector<double>& u2);

} // namespace wicksg::mc

#endif
