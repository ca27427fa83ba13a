#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stablebox/lepage.hpp"
#include "stablebox/rng.hpp"
#include "stablebox/stable.hpp"

namespace stablebox::limit_law {

/// M = max(w1 S_1^(-1/a), w2 (S_1*)^(-1/a)); M^-alpha is unit exponential.
double compute_m(const lepage::LePageEnvironment& env,
                 const stable::TailParams& tp);

/// One draw of the random limit at the requested times, all times sharing
/// the same uniforms. uniforms_* are captured only on request.
struct LimitDraw {
  std::vector<double> ts;
  std::vector<double> values;
  std::vector<double> uniforms_s;
  std::vector<double> uniforms_star;
};

/// Conditional sampler for
///   R(t) = (1/M) [ -w1 sum_j S_j^(-1/a) (d_j(t) - t)
///                  +w2 sum_j (S_j*)^(-1/a) (d_j*(t) - t) ],   j <= k,
/// with d_j(t) = 1{U_j <= t}. The environment stays fixed across draws;
/// each draw uses fresh uniforms shared across all evaluation times, which
/// realizes the joint law over a time vector.
class RConditionalSampler {
 public:
  RConditionalSampler(const lepage::LePageEnvironment& env,
                      const stable::TailParams& tp, std::size_t k);

  double m() const { return m_; }

  /// t(1-t)/M^2 * [w1^2 sum S_j^(-2/a) + w2^2 sum (S_j*)^(-2/a)], j <= k.
  double conditional_variance(double t) const;

  /// (min(t1,t2) - t1 t2)/M^2 * [same weighted square sums]; positive on
  /// (0,1)^2 and equal to the variance on the diagonal.
  double conditional_covariance(double t1, double t2) const;

  void draw(std::span<const double> ts, std::span<double> out,
            rng::RngStream& stream, lepage::Workspace& ws) const;

 private:
  std::size_t k_;
  double m_;
  double weighted_sq_sum_;
  std::vector<double> z_neg_;  // w1 * S_j^(-1/a)
  std::vector<double> z_pos_;  // w2 * (S_j*)^(-1/a)
};

/// num_draws draws of (R(t) : t in ts) against one fixed environment.
std::vector<LimitDraw> sample_r_conditional(
    const lepage::LePageEnvironment& env, const stable::TailParams& tp,
    std::span<const double> ts, std::size_t k, std::size_t num_draws,
    rng::RngStream& stream, bool capture_uniforms = false);

/// Analytic conditional second moments (free-function forms).
double r_conditional_variance(const lepage::LePageEnvironment& env,
                              const stable::TailParams& tp, double t,
                              std::size_t k);
double r_conditional_covariance(const lepage::LePageEnvironment& env,
                                const stable::TailParams& tp, double t1,
                                double t2, std::size_t k);

/// Weighted square-sum mass dropped by truncating at k, relative to the
/// mass kept: truncation_diagnostic / (w1^2 sum_{j<=k} S_j^(-2/a) + ...).
/// Multiplying the conditional variance by this ratio bounds the variance
/// the truncation discards, environment by environment.
double tail_variance_ratio(const lepage::LePageEnvironment& env,
                           const stable::TailParams& tp, std::size_t k);

/// Outer Monte Carlo over environments: num_envs fresh environments, each
/// with draws_per_env conditional draws of R(t); the distribution of the
/// conditional CDF across environments is the random limit itself.
struct RUnconditional {
  double t;
  std::vector<std::vector<double>> draws;  // [env][draw]
  std::vector<double> env_m;
  std::vector<double> env_tail_ratio;
  std::vector<double> x_grid;              // 201 points, pooled 0.5%..99.5%
  std::vector<std::vector<double>> env_cdf;  // [env][grid]
  std::vector<double> pooled;
};

RUnconditional sample_r_unconditional(const stable::TailParams& tp, double t,
                                      std::size_t k, std::size_t num_envs,
                                      std::size_t draws_per_env,
                                      rng::RngStream& stream);

}  // namespace stablebox::limit_law
