#include "stablebox/limit_law.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stablebox/kernels.hpp"

namespace stablebox::limit_law {

namespace {

void check_time(double t) {
  if (!(t > 0.0 && t < 1.0))
    throw std::invalid_argument("evaluation time must lie strictly in (0,1)");
}

}  // namespace

double compute_m(const lepage::LePageEnvironment& env,
                 const stable::TailParams& tp) {
  if (env.s.empty() || env.s_star.empty())
    throw std::invalid_argument("compute_m: empty environment");
  const double inv_alpha = 1.0 / tp.alpha;
  return std::max(tp.w1() * std::pow(env.s.front(), -inv_alpha),
                  tp.w2() * std::pow(env.s_star.front(), -inv_alpha));
}

RConditionalSampler::RConditionalSampler(const lepage::LePageEnvironment& env,
                                         const stable::TailParams& tp,
                                         std::size_t k)
    : k_(k) {
  if (env.s.size() < k || env.s_star.size() < k)
    throw std::invalid_argument("environment shorter than k");
  if (k < 1) throw std::invalid_argument("k < 1");

  z_neg_ = lepage::lepage_terms({env.s.data(), k}, tp.alpha);
  z_pos_ = lepage::lepage_terms({env.s_star.data(), k}, tp.alpha);
  const double w1 = tp.w1(), w2 = tp.w2();
  for (auto& v : z_neg_) v *= w1;
  for (auto& v : z_pos_) v *= w2;
  m_ = std::max(z_neg_.front(), z_pos_.front());
  weighted_sq_sum_ =
      kernels::dot(z_neg_, z_neg_) + kernels::dot(z_pos_, z_pos_);
}

double RConditionalSampler::conditional_variance(double t) const {
  check_time(t);
  return t * (1.0 - t) * weighted_sq_sum_ / (m_ * m_);
}

double RConditionalSampler::conditional_covariance(double t1,
                                                   double t2) const {
  check_time(t1);
  check_time(t2);
  return (std::min(t1, t2) - t1 * t2) * weighted_sq_sum_ / (m_ * m_);
}

void RConditionalSampler::draw(std::span<const double> ts,
                               std::span<double> out, rng::RngStream& stream,
                               lepage::Workspace& ws) const {
  for (double t : ts) check_time(t);
  if (ts.size() != out.size())
    throw std::invalid_argument("output span size mismatch");
  rng::Rng4 g(stream.next_u64(), stream.next_u64());
  ws.u1.resize(k_);
  ws.u2.resize(k_);
  kernels::fill_uniform(g, ws.u1);
  kernels::fill_uniform(g, ws.u2);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double t = ts[i];
    const double neg =
        kernels::select_weighted_sum(z_neg_, ws.u1, t, 1.0 - t, -t);
    const double pos =
        kernels::select_weighted_sum(z_pos_, ws.u2, t, 1.0 - t, -t);
    out[i] = (pos - neg) / m_;
  }
}

std::vector<LimitDraw> sample_r_conditional(
    const lepage::LePageEnvironment& env, const stable::TailParams& tp,
    std::span<const double> ts, std::size_t k, std::size_t num_draws,
    rng::RngStream& stream, bool capture_uniforms) {
  RConditionalSampler sampler(env, tp, k);
  lepage::Workspace ws;
  std::vector<LimitDraw> draws(num_draws);
  for (auto& d : draws) {
    d.ts.assign(ts.begin(), ts.end());
    d.values.resize(ts.size());
    sampler.draw(ts, d.values, stream, ws);
    if (capture_uniforms) {
      d.uniforms_s = ws.u1;
      d.uniforms_star = ws.u2;
    }
  }
  return draws;
}

double r_conditional_variance(const lepage::LePageEnvironment& env,
                              const stable::TailParams& tp, double t,
                              std::size_t k) {
  return RConditionalSampler(env, tp, k).conditional_variance(t);
}

double r_conditional_covariance(const lepage::LePageEnvironment& env,
                                const stable::TailParams& tp, double t1,
                                double t2, std::size_t k) {
  return RConditionalSampler(env, tp, k).conditional_covariance(t1, t2);
}

double tail_variance_ratio(const lepage::LePageEnvironment& env,
                           const stable::TailParams& tp, std::size_t k) {
  RConditionalSampler sampler(env, tp, k);
  const double half = 0.5;
  const double head = sampler.conditional_variance(half) /
                      (half * (1.0 - half)) * sampler.m() * sampler.m();
  return lepage::truncation_diagnostic(env, tp, k) / head;
}

RUnconditional sample_r_unconditional(const stable::TailParams& tp, double t,
                                      std::size_t k, std::size_t num_envs,
                                      std::size_t draws_per_env,
                                      rng::RngStream& stream) {
  check_time(t);
  RUnconditional result;
  result.t = t;
  result.draws.resize(num_envs);
  result.env_m.resize(num_envs);
  result.env_tail_ratio.resize(num_envs);

  lepage::Workspace ws;
  const double ts[1] = {t};
  for (std::size_t e = 0; e < num_envs; ++e) {
    const auto env = lepage::sample_environment(k, stream);
    RConditionalSampler sampler(env, tp, k);
    result.env_m[e] = sampler.m();
    const double head = sampler.conditional_variance(t) /
                        (t * (1.0 - t)) * sampler.m() * sampler.m();
    result.env_tail_ratio[e] = lepage::truncation_diagnostic(env, tp, k) / head;
    auto& vals = result.draws[e];
    vals.resize(draws_per_env);
    double out[1];
    for (auto& v : vals) {
      sampler.draw(ts, out, stream, ws);
      v = out[0];
    }
    result.pooled.insert(result.pooled.end(), vals.begin(), vals.end());
  }

  // Common evaluation grid spanning the pooled central 99% range.
  std::vector<double> sorted = result.pooled;
  std::sort(sorted.begin(), sorted.end());
  const auto pick = [&](double q) {
    const auto idx = static_cast<std::size_t>(
        q * static_cast<double>(sorted.size() - 1));
    return sorted[idx];
  };
  const double lo = pick(0.005), hi = pick(0.995);
  result.x_grid.resize(201);
  for (int i = 0; i <= 200; ++i)
    result.x_grid[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / 200.0;

  result.env_cdf.resize(num_envs);
  for (std::size_t e = 0; e < num_envs; ++e) {
    auto vals = result.draws[e];
    std::sort(vals.begin(), vals.end());
    auto& cdf = result.env_cdf[e];
    cdf.resize(result.x_grid.size());
    for (std::size_t i = 0; i < result.x_grid.size(); ++i) {
      const auto it =
          std::upper_bound(vals.begin(), vals.end(), result.x_grid[i]);
      cdf[i] = static_cast<double>(it - vals.begin()) /
               static_cast<double>(vals.size());
    }
  }
  return result;
}

}  // namespace stablebox::limit_law
