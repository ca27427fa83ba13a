#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "stablebox/kernels.hpp"
#include "stablebox/lepage.hpp"
#include "stablebox/limit_law.hpp"
#include "stablebox/rng.hpp"
#include "stablebox/stable.hpp"
#include "stablebox/stats.hpp"

using namespace stablebox;
using lepage::LePageEnvironment;
using limit_law::RConditionalSampler;
using stable::TailParams;
using stats::EmpiricalDistribution;

TEST_CASE("compute_m hand values") {
  LePageEnvironment env{{1.0}, {1.0}};
  CHECK(limit_law::compute_m(env, TailParams(1.0, 0.5)) == doctest::Approx(0.5));

  // p = 1: only the upper half matters
  LePageEnvironment env2{{0.3}, {2.0}};
  const TailParams one_sided(0.8, 1.0);
  CHECK(limit_law::compute_m(env2, one_sided) ==
        doctest::Approx(std::pow(2.0, -1.0 / 0.8)));
}

TEST_CASE("m marginal: M^-alpha is unit exponential across environments") {
  const TailParams tp(1.2, 0.7);
  rng::RngStream s(401, 0);
  const std::size_t reps = 100000;
  std::vector<double> m_pow(reps);
  for (auto& v : m_pow) {
    const auto env = lepage::sample_environment(1, s);
    v = std::pow(limit_law::compute_m(env, tp), -tp.alpha);
  }
  const double d = stats::ks_one_sample(
      EmpiricalDistribution::from_samples(std::move(m_pow)),
      [](double y) { return y <= 0.0 ? 0.0 : 1.0 - std::exp(-y); });
  CHECK(d < 0.01);
}

TEST_CASE("conditional variance hand example") {
  // k=1, S_1 = S_1* = 1, alpha = 1, p = q = 1/2, t = 1/2 -> 0.5
  LePageEnvironment env{{1.0}, {1.0}};
  const TailParams tp(1.0, 0.5);
  CHECK(limit_law::r_conditional_variance(env, tp, 0.5, 1) ==
        doctest::Approx(0.5));
  // t -> 0 kills the variance; symmetric in t <-> 1-t
  CHECK(limit_law::r_conditional_variance(env, tp, 0.001, 1) < 1e-3);
  CHECK(limit_law::r_conditional_variance(env, tp, 0.3, 1) ==
        doctest::Approx(limit_law::r_conditional_variance(env, tp, 0.7, 1)));
}

TEST_CASE("conditional covariance properties") {
  rng::RngStream s(402, 0);
  const TailParams tp(1.2, 0.7);
  const auto env = lepage::sample_environment(500, s);
  const RConditionalSampler sampler(env, tp, 500);
  CHECK(sampler.conditional_covariance(0.4, 0.4) ==
        doctest::Approx(sampler.conditional_variance(0.4)));
  for (double t1 : {0.1, 0.3, 0.6})
    for (double t2 : {0.2, 0.5, 0.9})
      CHECK(sampler.conditional_covariance(t1, t2) > 0.0);
}

TEST_CASE("monte carlo variance and covariance match the analytic forms") {
  rng::RngStream s(403, 0);
  const TailParams tp(1.2, 0.7);
  const auto env = lepage::sample_environment(2000, s);
  const RConditionalSampler sampler(env, tp, 2000);
  lepage::Workspace ws;

  const double ts[2] = {0.3, 0.7};
  const std::size_t reps = 100000;
  double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
  double out[2];
  for (std::size_t i = 0; i < reps; ++i) {
    sampler.draw(ts, out, s, ws);
    s1 += out[0];
    s2 += out[1];
    s11 += out[0] * out[0];
    s22 += out[1] * out[1];
    s12 += out[0] * out[1];
  }
  const double n = static_cast<double>(reps);
  const double mean1 = s1 / n, mean2 = s2 / n;
  const double var1 = s11 / n - mean1 * mean1;
  const double cov = s12 / n - mean1 * mean2;

  // conditional mean is 0
  CHECK(std::fabs(mean1) <
        3.0 * std::sqrt(sampler.conditional_variance(0.3) / n));

  // variance against analytic value, 3 s.e. of a variance estimate
  const double se_var = var1 * std::sqrt(2.0 / n) * 2.0;  // conservative
  CHECK(std::fabs(var1 - sampler.conditional_variance(0.3)) < 3.0 * se_var);

  const double se_cov = var1 * std::sqrt(2.0 / n) * 2.0;
  CHECK(std::fabs(cov - sampler.conditional_covariance(0.3, 0.7)) <
        3.0 * se_cov);
}

TEST_CASE("shared uniforms couple times monotonically and bit-exactly") {
  rng::RngStream s(404, 0);
  const TailParams tp(1.2, 0.7);
  const auto env = lepage::sample_environment(64, s);

  const double ts[2] = {0.3, 0.7};
  const auto draws =
      limit_law::sample_r_conditional(env, tp, ts, 64, 200, s, true);
  for (const auto& d : draws) {
    // delta_j(t1) <= delta_j(t2) for every j in every draw
    for (double u : d.uniforms_s) {
      CHECK(u > 0.0);
      CHECK((u <= 0.3) <= (u <= 0.7));
    }
    REQUIRE(d.values.size() == 2);
  }

  // recomputing R(t1) from the captured uniforms reproduces the joint value
  const RConditionalSampler sampler(env, tp, 64);
  const auto& d0 = draws.front();
  const double w1 = tp.w1(), w2 = tp.w2();
  const auto z_neg = lepage::lepage_terms({env.s.data(), 64}, tp.alpha);
  const auto z_pos = lepage::lepage_terms({env.s_star.data(), 64}, tp.alpha);
  std::vector<double> zn(64), zp(64);
  for (int i = 0; i < 64; ++i) {
    zn[static_cast<std::size_t>(i)] = w1 * z_neg[static_cast<std::size_t>(i)];
    zp[static_cast<std::size_t>(i)] = w2 * z_pos[static_cast<std::size_t>(i)];
  }
  const double t = 0.3;
  const double neg =
      kernels::select_weighted_sum(zn, d0.uniforms_s, t, 1.0 - t, -t);
  const double pos =
      kernels::select_weighted_sum(zp, d0.uniforms_star, t, 1.0 - t, -t);
  CHECK((pos - neg) / sampler.m() == d0.values[0]);
}

TEST_CASE("conditional mean of R(t) is zero over many draws") {
  rng::RngStream s(405, 0);
  const TailParams tp(1.5, 0.7);
  const auto env = lepage::sample_environment(2000, s);
  const RConditionalSampler sampler(env, tp, 2000);
  lepage::Workspace ws;
  const double ts[1] = {0.4};
  const std::size_t reps = 100000;
  double acc = 0.0;
  double out[1];
  for (std::size_t i = 0; i < reps; ++i) {
    sampler.draw(ts, out, s, ws);
    acc += out[0];
  }
  const double mean = acc / static_cast<double>(reps);
  const double se =
      std::sqrt(sampler.conditional_variance(0.4) / static_cast<double>(reps));
  CHECK(std::fabs(mean) < 3.0 * se);
}

TEST_CASE("unconditional: across-environment spread is nondegenerate") {
  const TailParams tp(1.2, 0.7);
  rng::RngStream s(406, 0);
  const auto res = limit_law::sample_r_unconditional(tp, 0.5, 1000, 100, 1000, s);
  // P_S{R(0.5) <= x0} at a probe off the symmetric point varies across envs
  std::vector<double> probs(res.draws.size());
  for (std::size_t e = 0; e < res.draws.size(); ++e) {
    const auto& vals = res.draws[e];
    probs[e] = static_cast<double>(std::count_if(
                   vals.begin(), vals.end(),
                   [](double v) { return v <= 0.5; })) /
               static_cast<double>(vals.size());
  }
  const double mean =
      std::accumulate(probs.begin(), probs.end(), 0.0) /
      static_cast<double>(probs.size());
  double ss = 0.0;
  for (double v : probs) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (static_cast<double>(probs.size()) - 1.0));
  CHECK(sd > 0.03);

  // at the symmetric probe x = 0 the conditional law is symmetric, so the
  // conditional probability is 1/2 for every environment
  for (std::size_t e = 0; e < 5; ++e) {
    const auto& vals = res.draws[e];
    const double p0 = static_cast<double>(std::count_if(
                          vals.begin(), vals.end(),
                          [](double v) { return v <= 0.0; })) /
                      static_cast<double>(vals.size());
    CHECK(std::fabs(p0 - 0.5) < 0.06);  // binomial noise at 1000 draws
  }
}

TEST_CASE("unconditional: pooled R is symmetric when p = q") {
  const TailParams tp(1.5, 0.5);
  rng::RngStream s(407, 0);
  const auto res =
      limit_law::sample_r_unconditional(tp, 0.5, 1000, 100, 1000, s);
  std::vector<double> negated(res.pooled.size());
  for (std::size_t i = 0; i < res.pooled.size(); ++i)
    negated[i] = -res.pooled[i];
  const double d = stats::ks_two_sample(
      EmpiricalDistribution::from_samples(res.pooled),
      EmpiricalDistribution::from_samples(std::move(negated)));
  CHECK(d < 0.02);
}

TEST_CASE("doubling draws halves the conditional-CDF standard error") {
  const TailParams tp(1.2, 0.7);
  rng::RngStream s(408, 0);
  const auto env = lepage::sample_environment(500, s);
  const RConditionalSampler sampler(env, tp, 500);
  lepage::Workspace ws;
  const double ts[1] = {0.5};

  const auto estimate_sd = [&](std::size_t draws, std::size_t repeats) {
    std::vector<double> probs(repeats);
    double out[1];
    for (auto& p : probs) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < draws; ++i) {
        sampler.draw(ts, out, s, ws);
        if (out[0] <= 0.5) ++hits;
      }
      p = static_cast<double>(hits) / static_cast<double>(draws);
    }
    const double mean =
        std::accumulate(probs.begin(), probs.end(), 0.0) /
        static_cast<double>(repeats);
    double ss = 0.0;
    for (double v : probs) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (static_cast<double>(repeats) - 1.0));
  };

  const double sd_small = estimate_sd(500, 400);
  const double sd_big = estimate_sd(1000, 400);
  const double ratio = sd_small / sd_big;
  CHECK(ratio > std::sqrt(2.0) * 0.8);
  CHECK(ratio < std::sqrt(2.0) * 1.2);
}

TEST_CASE("conditional law is continuous: no visible atoms") {
  const TailParams tp(1.2, 0.7);
  rng::RngStream s(409, 0);
  const auto env = lepage::sample_environment(2000, s);
  const RConditionalSampler sampler(env, tp, 2000);
  lepage::Workspace ws;
  const double ts[1] = {0.5};
  const std::size_t reps = 100000;
  std::vector<double> vals(reps);
  double out[1];
  for (auto& v : vals) {
    sampler.draw(ts, out, s, ws);
    v = out[0];
  }
  std::sort(vals.begin(), vals.end());
  std::size_t longest_run = 1, run = 1;
  for (std::size_t i = 1; i < reps; ++i) {
    run = (vals[i] == vals[i - 1]) ? run + 1 : 1;
    longest_run = std::max(longest_run, run);
  }
  const double largest_jump =
      static_cast<double>(longest_run) / static_cast<double>(reps);
  CHECK(largest_jump < 9.0 / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("tail variance beyond k is negligible for small alpha") {
  const TailParams tp(0.5, 0.7);
  rng::RngStream s(410, 0);
  for (int e = 0; e < 10; ++e) {
    const auto env = lepage::sample_environment(10000, s);
    CHECK(limit_law::tail_variance_ratio(env, tp, 10000) < 1e-6);
  }
}

TEST_CASE("time validation") {
  rng::RngStream s(411, 0);
  const TailParams tp(1.2, 0.7);
  const auto env = lepage::sample_environment(64, s);
  const RConditionalSampler sampler(env, tp, 64);
  CHECK_THROWS_AS(sampler.conditional_variance(0.0), std::invalid_argument);
  CHECK_THROWS_AS(sampler.conditional_variance(1.0), std::invalid_argument);
  CHECK_THROWS_AS(
      limit_law::sample_r_conditional(env, tp, std::vector<double>{1.5}, 64, 1,
                                      s),
      std::invalid_argument);
  CHECK_THROWS_AS(RConditionalSampler(env, tp, 100), std::invalid_argument);
}
