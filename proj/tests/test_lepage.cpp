#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "stablebox/lepage.hpp"
#include "stablebox/rng.hpp"
#include "stablebox/stable.hpp"
#include "stablebox/stats.hpp"

using namespace stablebox;
using lepage::EtaSampler;
using lepage::Workspace;
using stable::TailParams;
using stats::EmpiricalDistribution;

namespace {

// test-side oracle: midpoint Riemann sum for the centering integral
double riemann_centering(std::size_t k, double alpha, std::size_t points,
                         double upper) {
  const double a = static_cast<double>(k) - 1.0 - 1.0 / alpha;
  const double lg = std::lgamma(static_cast<double>(k));
  const double h = (upper - 1.0) / static_cast<double>(points);
  double acc = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double x = 1.0 + (static_cast<double>(i) + 0.5) * h;
    acc += std::exp(a * std::log(x) - x - lg);
  }
  return acc * h;
}

}  // namespace

TEST_CASE("exp_partial_sums: positivity, monotonicity, LLN") {
  rng::RngStream s(301, 0);
  const auto one = lepage::exp_partial_sums(1, s);
  REQUIRE(one.size() == 1);
  CHECK(one[0] > 0.0);

  for (int rep = 0; rep < 20; ++rep) {
    const auto seq = lepage::exp_partial_sums(200, s);
    for (std::size_t j = 0; j + 1 < seq.size(); ++j)
      CHECK(seq[j] < seq[j + 1]);
  }

  // mean of S_k/k over replicates
  const std::size_t k = 100, reps = 10000;
  double acc = 0.0;
  for (std::size_t i = 0; i < reps; ++i)
    acc += lepage::exp_partial_sums(k, s).back() / static_cast<double>(k);
  CHECK(acc / static_cast<double>(reps) == doctest::Approx(1.0).epsilon(0.03));

  CHECK_THROWS_AS(lepage::exp_partial_sums(0, s), std::invalid_argument);
}

TEST_CASE("lepage_terms: direct exponent checks") {
  const std::vector<double> s{1.0, 2.0, 4.0};
  const auto z1 = lepage::lepage_terms(s, 1.0);
  CHECK(z1[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(z1[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(z1[2] == doctest::Approx(0.25).epsilon(1e-14));

  const std::vector<double> s2{1.0, 4.0};
  const auto zhalf = lepage::lepage_terms(s2, 0.5);
  CHECK(zhalf[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(zhalf[1] == doctest::Approx(1.0 / 16.0).epsilon(1e-14));

  rng::RngStream st(302, 0);
  const auto seq = lepage::exp_partial_sums(500, st);
  const auto z = lepage::lepage_terms(seq, 1.7);
  for (std::size_t j = 0; j + 1 < z.size(); ++j) CHECK(z[j] > z[j + 1]);
}

TEST_CASE("centering constant: quadrature against a Riemann oracle") {
  // c_1 for alpha = 1.5 is int_1^inf x^(-2/3) e^-x dx
  const double got = lepage::centering_constant(1, 1.5);
  const double oracle = riemann_centering(1, 1.5, 1000000, 60.0);
  CHECK(std::fabs(got - oracle) < 1e-8);

  // k = 2, alpha = 1.2
  const double got2 = lepage::centering_constant(2, 1.2);
  const double oracle2 = riemann_centering(2, 1.2, 1000000, 70.0);
  CHECK(std::fabs(got2 - oracle2) < 1e-8);

  // decay: c_50 is tiny for alpha = 1.5... the indicator cuts everything
  // below S_k = 1 and P{S_50 < 1} is astronomically small; compare with the
  // unconditional bound instead
  CHECK(lepage::centering_constant(50, 1.5) <
        std::exp(std::lgamma(50.0 - 1.0 / 1.5) - std::lgamma(50.0)));

  // c_k <= Gamma(k - 1/alpha)/Gamma(k) for all k (drop the indicator)
  for (std::size_t k : {1u, 2u, 5u, 20u}) {
    const double bound =
        std::exp(std::lgamma(static_cast<double>(k) - 1.0 / 1.5) -
                 std::lgamma(static_cast<double>(k)));
    CHECK(lepage::centering_constant(k, 1.5) <= bound * (1.0 + 1e-9));
  }
  CHECK_THROWS_AS(lepage::centering_constant(1, 0.9), std::invalid_argument);
}

TEST_CASE("centering constant c_50 is numerically negligible") {
  // for alpha=1.5, c_50 ~ Gamma(50-2/3)/Gamma(50) ~ 50^-2/3 ~ 0.07 is the
  // uncentered mean; the indicator does not bite, so c_50 is close to it
  const double c50 = lepage::centering_constant(50, 1.5);
  const double ratio =
      std::exp(std::lgamma(50.0 - 2.0 / 3.0) - std::lgamma(50.0));
  CHECK(c50 == doctest::Approx(ratio).epsilon(1e-9));
}

TEST_CASE("centering_sum is consistent with per-term quadrature") {
  const double alpha = 1.3;
  double direct = 0.0;
  for (std::size_t j = 1; j <= 100; ++j)
    direct += lepage::centering_constant(j, alpha);
  CHECK(lepage::centering_sum(100, alpha) ==
        doctest::Approx(direct).epsilon(1e-9));
}

TEST_CASE("eta: one-sided construction is positive for alpha < 1") {
  const TailParams tp(0.7, 1.0);  // p = 1, w1 = 0
  const EtaSampler sampler(tp, 500);
  Workspace ws;
  rng::RngStream s(303, 0);
  for (int i = 0; i < 200; ++i) {
    const auto d = sampler.draw(s, ws);
    CHECK(d.eta > 0.0);
    CHECK(d.z > 0.0);
    CHECK(d.eta >= d.z);  // the max term is one of the summands
  }
}

TEST_CASE("eta strict stability at reduced size") {
  for (double alpha : {0.5, 1.0, 1.5}) {
    const TailParams tp(alpha, alpha == 1.0 ? 0.5 : 0.7);
    const std::size_t k = 2000, reps = 50000;
    const EtaSampler sampler(tp, k);
    Workspace ws;
    rng::RngStream s(304, static_cast<std::uint64_t>(alpha * 10));
    std::vector<double> a(reps), b(reps), c(reps);
    for (std::size_t i = 0; i < reps; ++i) {
      a[i] = sampler.draw(s, ws).eta;
      b[i] = sampler.draw(s, ws).eta;
      c[i] = sampler.draw(s, ws).eta;
    }
    std::vector<double> combined(reps);
    const double scale = std::pow(2.0, 1.0 / alpha);
    for (std::size_t i = 0; i < reps; ++i) combined[i] = (a[i] + b[i]) / scale;
    const double d =
        stats::ks_two_sample(EmpiricalDistribution::from_samples(combined),
                             EmpiricalDistribution::from_samples(c));
    CAPTURE(alpha);
    CHECK(d < 0.02);
  }
}

TEST_CASE("eta z-marginal: M^-alpha is unit exponential") {
  const double alpha = 1.2;
  const TailParams tp(alpha, 0.7);
  const EtaSampler sampler(tp, 200);  // z only involves the first terms
  Workspace ws;
  rng::RngStream s(305, 0);
  const std::size_t reps = 100000;
  std::vector<double> m_pow(reps);
  for (auto& v : m_pow) v = std::pow(sampler.draw(s, ws).z, -alpha);
  const double d = stats::ks_one_sample(
      EmpiricalDistribution::from_samples(std::move(m_pow)),
      [](double y) { return y <= 0.0 ? 0.0 : 1.0 - std::exp(-y); });
  CHECK(d < 0.01);
}

TEST_CASE("eta mean vanishes for symmetric alpha in (1,2)") {
  const TailParams tp(1.5, 0.5);
  const EtaSampler sampler(tp, 2000);
  Workspace ws;
  rng::RngStream s(306, 0);
  const std::size_t reps = 100000;
  double m = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < reps; ++i) {
    const double v = sampler.draw(s, ws).eta;
    m += v;
    ss += v * v;
  }
  m /= static_cast<double>(reps);
  const double se = std::sqrt((ss / static_cast<double>(reps) - m * m) /
                              static_cast<double>(reps));
  CHECK(std::fabs(m) < 3.0 * se);
}

TEST_CASE("bridge: endpoints are exactly zero and b = w - t w(1)") {
  const TailParams tp(1.2, 0.7);
  rng::RngStream s(307, 0);
  const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
  for (int i = 0; i < 20; ++i) {
    const auto path = lepage::sample_stable_bridge(tp, grid, 500, s);
    CHECK(path.b_values.front() == 0.0);
    CHECK(path.b_values.back() == 0.0);
    CHECK(path.z > 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g)
      CHECK(path.b_values[g] ==
            path.w_values[g] - grid[g] * path.w_values.back());
  }
  CHECK_THROWS_AS(
      lepage::sample_stable_bridge(tp, std::vector<double>{0.0, 0.5}, 10, s),
      std::invalid_argument);
}

TEST_CASE("bridge: W(1) from a refined grid matches eta by stability") {
  const double alpha = 1.5;
  const TailParams tp(alpha, 0.5);
  const std::size_t k = 2000, reps = 30000;
  rng::RngStream s(308, 0);
  Workspace ws;
  const lepage::BridgeSampler bridge(tp, {0.0, 0.25, 0.5, 0.75, 1.0}, k);
  std::vector<double> w1(reps);
  for (auto& v : w1) v = bridge.draw(s, ws).w_values.back();
  const EtaSampler sampler(tp, k);
  std::vector<double> etas(reps);
  for (auto& v : etas) v = sampler.draw(s, ws).eta;
  const double d =
      stats::ks_two_sample(EmpiricalDistribution::from_samples(std::move(w1)),
                           EmpiricalDistribution::from_samples(std::move(etas)));
  CHECK(d < 0.02);
}

TEST_CASE("bridge: interval refinement leaves W(0.5) invariant") {
  const double alpha = 1.2;
  const TailParams tp(alpha, 0.7);
  const std::size_t k = 1000, reps = 30000;
  rng::RngStream s(309, 0);
  Workspace ws;
  const lepage::BridgeSampler coarse(tp, {0.0, 0.5, 1.0}, k);
  const lepage::BridgeSampler fine(tp, {0.0, 0.25, 0.5, 1.0}, k);
  std::vector<double> a(reps), b(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    a[i] = coarse.draw(s, ws).w_values[1];   // W(0.5)
    b[i] = fine.draw(s, ws).w_values[2];     // W(0.5)
  }
  const double d =
      stats::ks_two_sample(EmpiricalDistribution::from_samples(std::move(a)),
                           EmpiricalDistribution::from_samples(std::move(b)));
  CHECK(d < 0.02);
}

TEST_CASE("truncation diagnostic: monotone in k, tail comparison") {
  const TailParams tp(1.0, 0.5);
  rng::RngStream s(310, 0);
  const auto env = lepage::sample_environment(10000, s);

  const double d100 = lepage::truncation_diagnostic(env, tp, 100);
  const double d1000 = lepage::truncation_diagnostic(env, tp, 1000);
  const double d_all = lepage::truncation_diagnostic(env, tp, 10000);
  CHECK(d100 > d1000);
  CHECK(d1000 > d_all);
  CHECK(d100 / d1000 > 5.0);  // ~1/k scaling of the S_j^-2 tail
  CHECK(d_all > 0.0);         // analytic remainder only

  CHECK_THROWS_AS(lepage::truncation_diagnostic(env, tp, 10001),
                  std::invalid_argument);
}

TEST_CASE("single-draw wrapper agrees with the sampler") {
  const TailParams tp(1.5, 0.7);
  rng::RngStream s1(311, 0), s2(311, 0);
  const auto a = lepage::sample_eta_with_max(tp, 300, s1);
  const EtaSampler sampler(tp, 300);
  Workspace ws;
  const auto b = sampler.draw(s2, ws);
  CHECK(a.eta == b.eta);
  CHECK(a.z == b.z);
}
