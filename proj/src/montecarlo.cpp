#include "wicksg/montecarlo.hpp"

#include <cmath>
#include <stdexcept>

namespace wicksg::mc {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double uniform01(std::uint64_t& state) {
  // (0, 1): 53 mantissa bits, offset so the value is never exactly zero
  return (static_cast<double>(splitmix64(state) >> 11) + 0.5) * 0x1.0p-53;
}

// streaming mean and M2 accumulator (Welford)
struct Welford {
  explicit Welford(Eigen::Index n) : count(0), mean(Eigen::VectorXd::Zero(n)), m2(Eigen::VectorXd::Zero(n)) {}
  void add(const Eigen::VectorXd& x) {
    ++count;
    const Eigen::VectorXd delta = x - mean;
    mean += delta / count;
    m2 += delta.cwiseProduct(x - mean);
  }
  Eigen::VectorXd variance() const {
    if (count < 2) throw std::logic_error("variance needs at least two samples");
    return m2 / (count - 1);
  }
  long count;
  Eigen::VectorXd mean, m2;
};

} // namespace

SampleStream::SampleStream(int m, std::uint64_t seed) : m_(m), seed_(seed) {
  if (m < 1) throw std::invalid_argument("SampleStream: dimension must be >= 1");
}

Eigen::VectorXd SampleStream::sample(std::int64_t i) const {
  // decorrelate the per-sample substream from the seed and the index
  std::uint64_t state = seed_ ^ (0xD1342543DE82EF95ull * (static_cast<std::uint64_t>(i) + 1));
  state = splitmix64(state);
  Eigen::VectorXd out(m_);
  for (int k = 0; k < m_; k += 2) {
    const double u1 = uniform01(state);
    const double u2 = uniform01(state);
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[k] = r * std::cos(2.0 * M_PI * u2);
    if (k + 1 < m_) out[k + 1] = r * std::sin(2.0 * M_PI * u2);
  }
  return out;
}

std::vector<Eigen::VectorXd> draw_samples(int m, int n_samples, std::uint64_t seed) {
  const SampleStream stream(m, seed);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) out.push_back(stream.sample(i));
  return out;
}

McEstimate mc_plain(const fem::FemSpace& space, const rf::LognormalCoefficient& coeff,
                    const Eigen::VectorXd& f_load, const McConfig& cfg) {
  if (cfg.n_samples < 2) throw std::invalid_argument("mc_plain: need at least two samples");
  const SampleStream stream(coeff.kl().modes(), cfg.seed);
  Welford acc(space.n_dof());
  for (int i = 0; i < cfg.n_samples; ++i) {
    const Eigen::VectorXd xi = stream.sample(i);
    Eigen::VectorXd u;
    try {
      const Eigen::VectorXd aq = coeff.sample(space.quad_points(), xi);
      const fem::SpdSolver solver(fem::assemble_stiffness(space, aq));
      u = solver.solve(f_load);
    } catch (const std::exception& err) {
      throw std::runtime_error("mc_plain: sample " + std::to_string(i) + " failed: " + err.what());
    }
    acc.add(u);
  }
  McEstimate est;
  est.mean = acc.mean;
  est.variance = acc.variance();
  est.kind = EstimatorKind::plain;
  est.n_samples = cfg.n_samples;
  est.seed = cfg.seed;
  return est;
}

McEstimate mc_control_variate(const fem::FemSpace& space, const rf::LognormalCoefficient& coeff,
                              const chaos::ChaosExpansion<Eigen::VectorXd>& u2_chaos,
                              const Eigen::VectorXd& f_load, const McConfig& cfg) {
  if (cfg.n_samples < 2) throw std::invalid_argument("mc_control_variate: need at least two samples");
  u2_chaos.check();
  if (u2_chaos.coeff.front().size() != space.n_dof())
    throw std::invalid_argument("mc_control_variate: surrogate does not match the discretization");
  if (u2_chaos.basis->dimension() != coeff.kl().modes())
    throw std::invalid_argument("mc_control_variate: surrogate and sampler must share the random space");
  const Eigen::VectorXd u2_mean = chaos_mean(u2_chaos);
  const SampleStream stream(coeff.kl().modes(), cfg.seed);
  Welford acc(space.n_dof());
  for (int i = 0; i < cfg.n_samples; ++i) {
    const Eigen::VectorXd xi = stream.sample(i);
    Eigen::VectorXd u1;
    try {
      const Eigen::VectorXd aq = coeff.sample(space.quad_points(), xi);
      const fem::SpdSolver solver(fem::assemble_stiffness(space, aq));
      u1 = solver.solve(f_load);
    } catch (const std::exception& err) {
      throw std::runtime_error("mc_control_variate: sample " + std::to_string(i) + " failed: " + err.what());
    }
    const Eigen::VectorXd u2 = chaos_eval(u2_chaos, xi);
    acc.add(u1 - cfg.cv_alpha * (u2 - u2_mean));
  }
  McEstimate est;
  est.mean = acc.mean;
  est.variance = acc.variance();
  est.kind = EstimatorKind::control_variate;
  est.n_samples = cfg.n_samples;
  est.seed = cfg.seed;
  return est;
}

VarianceReductionReport variance_reduction_report(const fem::FemSpace& space, const McEstimate& plain,
                                                  const McEstimate& cv) {
  if (plain.n_samples != cv.n_samples || plain.seed != cv.seed)
    throw std::invalid_argument("variance_reduction_report: estimates must share the sample stream");
  VarianceReductionReport rep;
  const Eigen::VectorXd vp = space.value_op() * plain.variance;
  const Eigen::VectorXd vc = space.value_op() * cv.variance;
  rep.int_var_plain = vp.dot(space.quad_weights());
  rep.int_var_cv = vc.dot(space.quad_weights());
  rep.h1_var_plain = fem::h1_seminorm(space, plain.variance);
  rep.h1_var_cv = fem::h1_seminorm(space, cv.variance);
  rep.ratio_l2 = rep.int_var_cv / rep.int_var_plain;
  rep.ratio_h1 = rep.h1_var_cv / rep.h1_var_plain;
  rep.estimator_variance_cv = rep.int_var_cv / cv.n_samples;
  return rep;
}

double estimate_optimal_alpha(const std::vector<double>& u1, const std::vector<double>& u2) {
  if (u1.size() != u2.size()) throw std::invalid_argument("estimate_optimal_alpha: length mismatch");
  const std::size_t n = u1.size();
  if (n < 30) throw std::invalid_argument("estimate_optimal_alpha: need at least 30 paired samples");
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m1 += u1[i];
    m2 += u2[i];
  }
  m1 /= static_cast<double>(n);
  m2 /= static_cast<double>(n);
  double cov = 0.0, var2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (u1[i] - m1) * (u2[i] - m2);
    var2 += (u2[i] - m2) * (u2[i] - m2);
  }
  if (var2 == 0.0) throw std::invalid_argument("estimate_optimal_alpha: surrogate samples have zero variance");
  return cov / var2;
}

} // namespace wicksg::mc
