#include "stablebox/experiments.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "stablebox/cusum.hpp"
#include "stablebox/kernels.hpp"
#include "stablebox/lepage.hpp"
#include "stablebox/limit_law.hpp"
#include "stablebox/permutation.hpp"
#include "stablebox/rng.hpp"
#include "stablebox/stable.hpp"
#include "stablebox/stats.hpp"
#include "stablebox/version.hpp"

namespace stablebox::experiments {

namespace {

using json = nlohmann::json;

constexpr std::string_view kExperiments[] = {
    "finite_variance",  "lepage_stability",     "bridge_crossval",
    "permutation_randomness", "covariance_identity", "averaging_check"};

std::uint32_t experiment_id(std::string_view name) {
  for (std::uint32_t i = 0; i < std::size(kExperiments); ++i)
    if (kExperiments[i] == name) return i + 1;
  throw std::invalid_argument("unknown experiment: " + std::string(name));
}

rng::RngStream stream_for(const ExperimentConfig& cfg, std::uint32_t purpose,
                          std::uint64_t replicate) {
  const std::uint64_t stream_id =
      rng::derive_key(experiment_id(cfg.experiment), purpose, replicate);
  return rng::RngStream(cfg.seed, stream_id);
}

unsigned resolve_threads(const ExperimentConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : std::min(hw, 8u);
}

/// Runs fn(i) for i in [0, count). Work is preassigned by index, results go
/// into index-addressed slots inside fn, so the outcome does not depend on
/// the thread count or the scheduling order.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const unsigned t = static_cast<unsigned>(
      std::min<std::size_t>(threads, count));
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  pool.reserve(t);
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += t) fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double tolerance_for(const ExperimentConfig& cfg, const std::string& name,
                     double fallback) {
  const auto it = cfg.tolerances.find(name);
  return it == cfg.tolerances.end() ? fallback : it->second;
}

Metric gated(const ExperimentConfig& cfg, std::string name, double value,
             double default_tol, Cmp cmp, std::string note = {}) {
  Metric m;
  m.name = std::move(name);
  m.value = value;
  m.tolerance = tolerance_for(cfg, m.name, default_tol);
  m.cmp = cmp;
  m.pass = (cmp == Cmp::le) ? (value <= *m.tolerance) : (value >= *m.tolerance);
  m.note = std::move(note);
  return m;
}

Metric targeted(const ExperimentConfig& cfg, std::string name, double value,
                double target, double default_tol, std::string note = {}) {
  Metric m;
  m.name = std::move(name);
  m.value = value;
  m.tolerance = tolerance_for(cfg, m.name, default_tol);
  m.target = target;
  m.pass = std::fabs(value - target) <= *m.tolerance;
  m.note = std::move(note);
  return m;
}

Metric info(std::string name, double value, std::string note = {}) {
  Metric m;
  m.name = std::move(name);
  m.value = value;
  m.note = std::move(note);
  return m;
}

cusum::RationalT rational_time(double t) {
  constexpr std::int64_t kDen = 1'000'000;
  const auto num = static_cast<std::int64_t>(std::llround(t * kDen));
  if (num < 0 || num > kDen)
    throw std::invalid_argument("time point outside [0,1]");
  return {num, kDen};
}

double sd(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

std::vector<double> draw_law(const ExperimentConfig& cfg, std::uint64_t n,
                             rng::RngStream& stream) {
  if (cfg.law == "normal") {
    std::vector<double> xs(n);
    for (auto& v : xs) v = stream.normal();
    return xs;
  }
  if (cfg.law == "pareto")
    return stable::sample_two_sided_pareto(cfg.pareto_index, cfg.p, n, stream);
  throw std::invalid_argument("unknown data law: " + cfg.law);
}

// ---------------------------------------------------------------------------
// finite_variance
// ---------------------------------------------------------------------------

void run_finite_variance(const ExperimentConfig& cfg, unsigned threads,
                         std::vector<Metric>& out) {
  const bool do_ks = cfg.parts == "ks" || cfg.parts == "all";
  const bool do_spread = cfg.parts == "spread" || cfg.parts == "all";

  if (do_ks) {
    if (cfg.law == "pareto" && cfg.pareto_index <= 2.0)
      throw std::invalid_argument(
          "finite_variance requires a finite-variance law (pareto index > 2)");
    const std::size_t reps = cfg.reps;
    std::vector<double> sup_plain(reps), sup_perm(reps);
    const auto grid = cusum::full_grid(cfg.n);
    parallel_for(reps, threads, [&](std::size_t i) {
      auto s1 = stream_for(cfg, 1, i);
      const cusum::Realization r1(draw_law(cfg, cfg.n, s1));
      sup_plain[i] = cusum::sup_functional(cusum::cusum_zn(r1, grid));

      auto s2 = stream_for(cfg, 2, i);
      const cusum::Realization r2(draw_law(cfg, cfg.n, s2));
      const auto perm = permutation::random_permutation(cfg.n, s2);
      sup_perm[i] =
          cusum::sup_functional(cusum::cusum_zn_permuted(r2, perm, grid));
    });

    const auto d_plain = stats::EmpiricalDistribution::from_samples(sup_plain);
    const auto d_perm = stats::EmpiricalDistribution::from_samples(sup_perm);
    out.push_back(gated(cfg, "sup_zn_ks_vs_kolmogorov",
                        stats::ks_one_sample(d_plain, stats::kolmogorov_cdf),
                        0.03, Cmp::le));
    out.push_back(gated(cfg, "sup_znpi_ks_vs_kolmogorov",
                        stats::ks_one_sample(d_perm, stats::kolmogorov_cdf),
                        0.03, Cmp::le));
    out.push_back(targeted(cfg, "sup_zn_quantile_95", d_plain.quantile(0.95),
                           1.358, 0.05));
  }

  if (do_spread) {
    const double t = cfg.ts.at(0);
    const cusum::RationalT rt = rational_time(t);
    const std::size_t reals = cfg.num_envs;
    double spread[2] = {0.0, 0.0};
    double floor_mc[2] = {0.0, 0.0};
    const std::uint64_t sizes[2] = {cfg.n_small, cfg.n};
    for (int which = 0; which < 2; ++which) {
      std::vector<double> probs(reals);
      std::vector<double> noise(reals);
      parallel_for(reals, threads, [&](std::size_t i) {
        auto s = stream_for(cfg, 10 + static_cast<std::uint32_t>(which), i);
        const auto data = draw_law(cfg, sizes[which], s);
        const auto r = cusum::tie_break(cusum::Realization(data), cfg.alpha);
        permutation::PermutedStatSampler sampler(r, rt);
        std::uint64_t hits = 0;
        for (std::uint64_t p = 0; p < cfg.num_perms; ++p)
          if (sampler.draw(s) <= cfg.x0) ++hits;
        const double f =
            static_cast<double>(hits) / static_cast<double>(cfg.num_perms);
        probs[i] = f;
        noise[i] = std::sqrt(std::max(f * (1.0 - f), 0.0) /
                             static_cast<double>(cfg.num_perms));
      });
      spread[which] = sd(probs);
      floor_mc[which] =
          std::accumulate(noise.begin(), noise.end(), 0.0) /
          static_cast<double>(reals);
    }
    out.push_back(info("spread_at_n_small", spread[0]));
    out.push_back(info("spread_at_n_large", spread[1]));
    out.push_back(info("spread_mc_floor_small", floor_mc[0]));
    out.push_back(info("spread_mc_floor_large", floor_mc[1]));
    out.push_back(gated(cfg, "spread_ratio_small_over_large",
                        spread[0] / spread[1], 2.0, Cmp::ge,
                        "conditional-CDF spread must at least halve"));
  }
}

// ---------------------------------------------------------------------------
// lepage_stability
// ---------------------------------------------------------------------------

void eta_block_draws(const ExperimentConfig& cfg, const lepage::EtaSampler& es,
                     std::uint32_t purpose, std::size_t count,
                     unsigned threads, std::vector<double>* etas,
                     std::vector<double>* zs) {
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (count + kBlock - 1) / kBlock;
  if (etas) etas->resize(count);
  if (zs) zs->resize(count);
  parallel_for(blocks, threads, [&](std::size_t b) {
    auto s = stream_for(cfg, purpose, b);
    lepage::Workspace ws;
    const std::size_t begin = b * kBlock;
    const std::size_t end = std::min(count, begin + kBlock);
    for (std::size_t i = begin; i < end; ++i) {
      const auto d = es.draw(s, ws);
      if (etas) (*etas)[i] = d.eta;
      if (zs) (*zs)[i] = d.z;
    }
  });
}

void run_lepage_stability(const ExperimentConfig& cfg, unsigned threads,
                          std::vector<Metric>& out) {
  const double alpha = cfg.alpha;
  const double p = alpha == 1.0 ? 0.5 : cfg.p;
  const stable::TailParams tp(alpha, p);
  const lepage::EtaSampler sampler(tp, cfg.k_truncation);
  const std::size_t reps = cfg.reps;

  std::vector<double> eta_a, eta_b, eta_c, z_a;
  eta_block_draws(cfg, sampler, 1, reps, threads, &eta_a, &z_a);
  eta_block_draws(cfg, sampler, 2, reps, threads, &eta_b, nullptr);
  eta_block_draws(cfg, sampler, 3, reps, threads, &eta_c, nullptr);

  const double scale = std::pow(2.0, 1.0 / alpha);
  std::vector<double> combined(reps);
  for (std::size_t i = 0; i < reps; ++i)
    combined[i] = (eta_a[i] + eta_b[i]) / scale;
  out.push_back(gated(
      cfg, "eta_strict_stability_ks",
      stats::ks_two_sample(
          stats::EmpiricalDistribution::from_samples(std::move(combined)),
          stats::EmpiricalDistribution::from_samples(std::move(eta_c))),
      0.02, Cmp::le, "(eta+eta')/2^(1/alpha) against a fresh eta"));

  // z marginal: z^-alpha should be unit exponential
  std::vector<double> z_pow(reps);
  for (std::size_t i = 0; i < reps; ++i) z_pow[i] = std::pow(z_a[i], -alpha);
  out.push_back(gated(
      cfg, "m_marginal_exp_ks",
      stats::ks_one_sample(
          stats::EmpiricalDistribution::from_samples(std::move(z_pow)),
          [](double y) { return y <= 0.0 ? 0.0 : 1.0 - std::exp(-y); }),
      0.01, Cmp::le));

  // symmetric-case cross-validation against the direct transform sampler
  const stable::TailParams tp_sym(alpha, 0.5);
  const lepage::EtaSampler sym_sampler(tp_sym, cfg.k_truncation);
  std::vector<double> eta_sym;
  eta_block_draws(cfg, sym_sampler, 4, reps, threads, &eta_sym, nullptr);
  std::vector<double> direct(reps);
  {
    constexpr std::size_t kBlock = 4096;
    const std::size_t blocks = (reps + kBlock - 1) / kBlock;
    parallel_for(blocks, threads, [&](std::size_t b) {
      auto s = stream_for(cfg, 5, b);
      const std::size_t begin = b * kBlock;
      const std::size_t end = std::min(reps, begin + kBlock);
      const auto draws = stable::sample_stable(
          stable::StableParams(alpha, 0.0), end - begin, s);
      std::copy(draws.begin(), draws.end(), direct.begin() + begin);
    });
  }
  const auto iqr = [](std::vector<double> v) {
    const auto d = stats::EmpiricalDistribution::from_samples(std::move(v));
    return d.quantile(0.75) - d.quantile(0.25);
  };
  const double iqr_eta = iqr(eta_sym);
  const double iqr_direct = iqr(direct);
  for (auto& v : eta_sym) v /= iqr_eta;
  for (auto& v : direct) v /= iqr_direct;
  out.push_back(gated(
      cfg, "eta_vs_direct_stable_ks",
      stats::ks_two_sample(
          stats::EmpiricalDistribution::from_samples(std::move(eta_sym)),
          stats::EmpiricalDistribution::from_samples(std::move(direct))),
      0.03, Cmp::le, "IQR-matched symmetric comparison"));

  // truncation certificate over a small environment ensemble
  {
    auto s = stream_for(cfg, 6, 0);
    std::vector<double> ratios(16);
    for (auto& v : ratios) {
      const auto env = lepage::sample_environment(cfg.k_truncation, s);
      v = limit_law::tail_variance_ratio(env, tp, cfg.k_truncation);
    }
    std::sort(ratios.begin(), ratios.end());
    out.push_back(info("tail_variance_ratio_median", ratios[ratios.size() / 2],
                       "dropped/kept weighted square mass at k"));
  }
}

// ---------------------------------------------------------------------------
// bridge_crossval
// ---------------------------------------------------------------------------

void run_bridge_crossval(const ExperimentConfig& cfg, unsigned threads,
                         std::vector<Metric>& out) {
  const stable::TailParams tp(cfg.alpha, cfg.p);
  const double t = cfg.ts.at(0);
  const cusum::RationalT rt = rational_time(t);
  const cusum::Grid grid1{rt};
  const std::size_t reps = cfg.reps;

  std::vector<double> an(reps), an_perm(reps), limit(reps);
  parallel_for(reps, threads, [&](std::size_t i) {
    auto s1 = stream_for(cfg, 1, i);
    const cusum::Realization r1(
        stable::sample_domain_of_attraction(tp, cfg.n, s1));
    an[i] = cusum::cusum_an(r1, grid1).values[0];

    auto s3 = stream_for(cfg, 3, i);
    const cusum::Realization r3(
        stable::sample_domain_of_attraction(tp, cfg.n, s3));
    const auto perm = permutation::random_permutation(cfg.n, s3);
    an_perm[i] = cusum::cusum_an_permuted(r3, perm, grid1).values[0];
  });

  const lepage::BridgeSampler bridge(tp, {0.0, t, 1.0}, cfg.k_truncation);
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (reps + kBlock - 1) / kBlock;
  parallel_for(blocks, threads, [&](std::size_t b) {
    auto s = stream_for(cfg, 2, b);
    lepage::Workspace ws;
    const std::size_t begin = b * kBlock;
    const std::size_t end = std::min(reps, begin + kBlock);
    for (std::size_t i = begin; i < end; ++i) {
      const auto path = bridge.draw(s, ws);
      limit[i] = path.b_values[1] / path.z;
    }
  });

  const auto d_an = stats::EmpiricalDistribution::from_samples(an);
  out.push_back(gated(
      cfg, "an_vs_stable_bridge_ks",
      stats::ks_two_sample(
          d_an, stats::EmpiricalDistribution::from_samples(std::move(limit))),
      0.05, Cmp::le, "A_n(t) against B(t)/Z from the series sampler"));
  out.push_back(gated(
      cfg, "an_perm_vs_an_ks",
      stats::ks_two_sample(d_an, stats::EmpiricalDistribution::from_samples(
                                     std::move(an_perm))),
      0.02, Cmp::le, "unconditional permuted process against the plain one"));
}

// ---------------------------------------------------------------------------
// permutation_randomness
// ---------------------------------------------------------------------------

void run_permutation_randomness(const ExperimentConfig& cfg, unsigned threads,
                                std::vector<Metric>& out) {
  const stable::TailParams tp(cfg.alpha, cfg.p);
  const double t = cfg.ts.at(0);
  const cusum::RationalT rt = rational_time(t);
  const std::size_t reals = cfg.num_envs;

  // (i) conditional CDF value at the probe, spread across fixed realizations
  double spread[2] = {0.0, 0.0};
  double spread_zero[2] = {0.0, 0.0};
  std::vector<double> probs_large;
  const std::uint64_t sizes[2] = {cfg.n_small, cfg.n};
  for (int which = 0; which < 2; ++which) {
    std::vector<double> probs(reals), probs0(reals);
    parallel_for(reals, threads, [&](std::size_t i) {
      auto s = stream_for(cfg, 10 + static_cast<std::uint32_t>(which), i);
      const auto data =
          stable::sample_domain_of_attraction(tp, sizes[which], s);
      const auto r = cusum::tie_break(cusum::Realization(data), cfg.alpha);
      permutation::PermutedStatSampler sampler(r, rt);
      std::uint64_t hits = 0, hits0 = 0;
      for (std::uint64_t p = 0; p < cfg.num_perms; ++p) {
        const double v = sampler.draw(s);
        if (v <= cfg.x0) ++hits;
        if (v <= 0.0) ++hits0;
      }
      probs[i] = static_cast<double>(hits) / static_cast<double>(cfg.num_perms);
      probs0[i] =
          static_cast<double>(hits0) / static_cast<double>(cfg.num_perms);
    });
    spread[which] = sd(probs);
    spread_zero[which] = sd(probs0);
    if (which == 1) probs_large = std::move(probs);
  }
  out.push_back(gated(cfg, "spread_at_n_small", spread[0], 0.03, Cmp::ge,
                      "across-realization sd of P{A <= x0}"));
  out.push_back(gated(cfg, "spread_at_n_large", spread[1], 0.03, Cmp::ge,
                      "across-realization sd of P{A <= x0}"));
  out.push_back(gated(cfg, "spread_ratio_small_over_large",
                      spread[0] / spread[1], 2.0, Cmp::le,
                      "non-vanishing: spread must NOT halve"));
  out.push_back(info("spread_at_zero_large", spread_zero[1],
                     "x=0 at t=1/2 is a symmetric probe: the conditional law "
                     "is symmetric, P{A<=0}=1/2 for every realization, so "
                     "this sd is pure Monte Carlo noise"));

  // (ii) limit side: conditional CDF value across fresh environments
  auto s_env = stream_for(cfg, 20, 0);
  const auto uncond = limit_law::sample_r_unconditional(
      tp, t, cfg.k_truncation, cfg.num_envs, cfg.draws_per_env, s_env);
  std::vector<double> g_probs(cfg.num_envs);
  for (std::size_t e = 0; e < cfg.num_envs; ++e) {
    const auto& vals = uncond.draws[e];
    g_probs[e] = static_cast<double>(std::count_if(
                     vals.begin(), vals.end(),
                     [&](double v) { return v <= cfg.x0; })) /
                 static_cast<double>(vals.size());
  }
  out.push_back(info("r_side_spread", sd(g_probs),
                     "across-environment sd of P{R <= x0}"));
  out.push_back(gated(
      cfg, "conditional_cdf_match_ks",
      stats::ks_two_sample(
          stats::EmpiricalDistribution::from_samples(probs_large),
          stats::EmpiricalDistribution::from_samples(g_probs)),
      0.15, Cmp::le,
      "realization-conditional CDF values against environment-conditional "
      "R(t) CDF values"));

  // (iii) joint times: Monte Carlo covariance against the analytic form
  const double t1 = cfg.ts.size() > 2 ? cfg.ts[1] : 0.3;
  const double t2 = cfg.ts.size() > 2 ? cfg.ts[2] : 0.7;
  const std::size_t j_envs = std::min<std::size_t>(5, cfg.num_envs);
  double worst_z = 0.0;
  auto s_joint = stream_for(cfg, 21, 0);
  for (std::size_t e = 0; e < j_envs; ++e) {
    const auto env = lepage::sample_environment(cfg.k_truncation, s_joint);
    const limit_law::RConditionalSampler sampler(env, tp, cfg.k_truncation);
    const double analytic = sampler.conditional_covariance(t1, t2);

    constexpr std::size_t kBatches = 20;
    const std::size_t per_batch =
        std::max<std::size_t>(200, cfg.draws_per_env * 10 / kBatches);
    std::vector<double> batch_cov(kBatches);
    lepage::Workspace ws;
    const double ts2[2] = {t1, t2};
    double vals[2];
    for (std::size_t b = 0; b < kBatches; ++b) {
      double sx = 0, sy = 0, sxy = 0;
      for (std::size_t d = 0; d < per_batch; ++d) {
        sampler.draw(ts2, vals, s_joint, ws);
        sx += vals[0];
        sy += vals[1];
        sxy += vals[0] * vals[1];
      }
      const double nb = static_cast<double>(per_batch);
      batch_cov[b] = sxy / nb - (sx / nb) * (sy / nb);
    }
    const double mean_cov =
        std::accumulate(batch_cov.begin(), batch_cov.end(), 0.0) /
        static_cast<double>(kBatches);
    const double se =
        sd(batch_cov) / std::sqrt(static_cast<double>(kBatches));
    worst_z = std::max(worst_z, std::fabs(mean_cov - analytic) / se);
  }
  out.push_back(gated(cfg, "joint_cov_worst_z", worst_z, 3.0, Cmp::le,
                      "|MC - analytic| / s.e. for Cov(R(t1), R(t2))"));

  // truncation certificate across the environments used above
  const double worst_ratio =
      *std::max_element(uncond.env_tail_ratio.begin(),
                        uncond.env_tail_ratio.end());
  out.push_back(info("tail_variance_ratio_worst", worst_ratio,
                     "dropped/kept weighted square mass at k"));
}

// ---------------------------------------------------------------------------
// covariance_identity
// ---------------------------------------------------------------------------

void run_covariance_identity(const ExperimentConfig& cfg, unsigned /*threads*/,
                             std::vector<Metric>& out) {
  if (cfg.n > 7)
    throw std::invalid_argument("covariance_identity requires n <= 7");

  std::uint64_t checks = 0, matches = 0;
  const cusum::RationalT times[] = {{0, 1}, {1, 4}, {1, 2}, {3, 4}, {1, 1}};
  for (std::size_t n = 2; n <= cfg.n; ++n) {
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    for (const auto t : times) {
      const std::size_t m = cusum::floor_nt(t, n);
      // enumerate all n! permutations; count joint selections exactly
      std::vector<std::vector<std::int64_t>> joint(
          n, std::vector<std::int64_t>(n, 0));
      std::vector<std::int64_t> single(n, 0);
      std::int64_t total = 0;
      std::sort(perm.begin(), perm.end());
      do {
        ++total;
        for (std::size_t a = 0; a < m; ++a) {
          ++single[perm[a]];
          for (std::size_t b = 0; b < m; ++b) ++joint[perm[a]][perm[b]];
        }
      } while (std::next_permutation(perm.begin(), perm.end()));

      const auto expected = permutation::epsilon_moments(n, t);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t kk = 0; kk < n; ++kk) {
          const permutation::Rational e_jk(joint[j][kk], total);
          const permutation::Rational e_j(single[j], total);
          const permutation::Rational e_k(single[kk], total);
          const permutation::Rational centered = e_jk - e_j * e_k;
          ++checks;
          if (j == kk) {
            if (centered == expected.variance) ++matches;
          } else {
            if (centered == expected.covariance) ++matches;
          }
        }
      }
    }
  }
  Metric m1;
  m1.name = "epsilon_moment_exact_matches";
  m1.value = static_cast<double>(matches);
  m1.tolerance = static_cast<double>(checks);
  m1.cmp = Cmp::ge;
  m1.pass = matches == checks;
  m1.note = "exact rational equality, exhaustive enumeration";
  out.push_back(m1);

  // rewriting identity on random instances at n = 7
  const std::size_t instances = 100;
  std::uint64_t bit_exact = 0;
  double worst_rel = 0.0;
  const stable::TailParams tp(cfg.alpha, cfg.p);
  auto s = stream_for(cfg, 2, 0);
  const cusum::RationalT t{1, 2};
  const std::size_t n = 7;
  for (std::size_t inst = 0; inst < instances; ++inst) {
    const auto r = cusum::tie_break(
        cusum::Realization(stable::sample_domain_of_attraction(tp, n, s)),
        cfg.alpha);
    const auto perm = permutation::random_permutation(n, s);
    const auto ind = permutation::epsilon_indicators(r, perm, t);
    const std::size_t m = ind.m;

    std::vector<double> sorted = r.x;
    std::sort(sorted.begin(), sorted.end());
    const double mean = stats::exact_sum(r.x) / static_cast<double>(n);

    // left side: the first m permuted summands; right side: the selected
    // order statistics. Same multiset, so the exact sums must agree bitwise.
    std::vector<double> lhs_terms, rhs_terms;
    for (std::size_t j = 0; j < m; ++j) lhs_terms.push_back(r.x[perm[j]]);
    for (std::size_t j = 0; j < n; ++j)
      if (ind.eps[j]) rhs_terms.push_back(sorted[j]);
    const double lhs_exact = stats::exact_sum(lhs_terms);
    const double rhs_exact = stats::exact_sum(rhs_terms);
    if (lhs_exact == rhs_exact) ++bit_exact;

    // production path against the centered-indicator form
    const double denom = cusum::t_n(r);
    const double lhs =
        cusum::cusum_an_permuted(r, perm, cusum::Grid{t}).values[0];
    double rhs = 0.0;
    const double frac = static_cast<double>(m) / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j)
      rhs += (sorted[j] - mean) *
             (static_cast<double>(ind.eps[j]) - frac);
    rhs /= denom;
    const double scale = std::max(1.0, std::fabs(lhs));
    worst_rel = std::max(worst_rel, std::fabs(lhs - rhs) / scale);
  }
  Metric m2;
  m2.name = "rewriting_identity_bitexact";
  m2.value = static_cast<double>(bit_exact);
  m2.tolerance = static_cast<double>(instances);
  m2.cmp = Cmp::ge;
  m2.pass = bit_exact == instances;
  m2.note = "exact sums of the two summand multisets agree bit for bit";
  out.push_back(m2);
  out.push_back(gated(cfg, "rewriting_identity_max_rel_err", worst_rel, 1e-12,
                      Cmp::le, "production path vs centered indicator form"));
}

// ---------------------------------------------------------------------------
// averaging_check
// ---------------------------------------------------------------------------

void run_averaging_check(const ExperimentConfig& cfg, unsigned threads,
                         std::vector<Metric>& out) {
  const stable::TailParams tp(cfg.alpha, cfg.p);
  const cusum::RationalT rt = rational_time(cfg.ts.at(0));
  const cusum::Grid grid1{rt};
  const std::size_t reps = cfg.reps;

  std::vector<double> plain(reps), permuted(reps);
  parallel_for(reps, threads, [&](std::size_t i) {
    auto s1 = stream_for(cfg, 1, i);
    const cusum::Realization r1(
        stable::sample_domain_of_attraction(tp, cfg.n, s1));
    plain[i] = cusum::cusum_an(r1, grid1).values[0];

    auto s2 = stream_for(cfg, 2, i);
    const cusum::Realization r2(
        stable::sample_domain_of_attraction(tp, cfg.n, s2));
    const auto perm = permutation::random_permutation(cfg.n, s2);
    permuted[i] = cusum::cusum_an_permuted(r2, perm, grid1).values[0];
  });

  out.push_back(gated(
      cfg, "averaged_an_perm_vs_an_ks",
      stats::ks_two_sample(
          stats::EmpiricalDistribution::from_samples(std::move(plain)),
          stats::EmpiricalDistribution::from_samples(std::move(permuted))),
      0.02, Cmp::le, "both pooled over data and permutation"));

  // endpoint degeneracy: at t = 1 both statistics are exactly zero
  double worst = 0.0;
  auto s = stream_for(cfg, 3, 0);
  const cusum::Grid grid_end{cusum::RationalT{1, 1}};
  for (int i = 0; i < 32; ++i) {
    const cusum::Realization r(
        stable::sample_domain_of_attraction(tp, cfg.n, s));
    const auto perm = permutation::random_permutation(cfg.n, s);
    worst = std::max(worst,
                     std::fabs(cusum::cusum_an_permuted(r, perm, grid_end)
                                   .values[0]));
    worst = std::max(worst,
                     std::fabs(cusum::cusum_an(r, grid_end).values[0]));
  }
  out.push_back(
      gated(cfg, "endpoint_degenerate_max_abs", worst, 0.0, Cmp::le,
            "telescoping makes t=1 exactly zero"));
}

}  // namespace

// ---------------------------------------------------------------------------
// public API
// ---------------------------------------------------------------------------

bool ExperimentReport::all_pass() const {
  for (const auto& m : metrics)
    if (m.pass.has_value() && !*m.pass) return false;
  return true;
}

ExperimentConfig default_config(std::string_view experiment) {
  ExperimentConfig cfg;
  cfg.experiment = std::string(experiment);
  experiment_id(experiment);  // validates
  if (experiment == "finite_variance") {
    cfg.law = "normal";
    cfg.n = 1000;
    cfg.reps = 5000;
    cfg.n_small = 200;
    cfg.num_envs = 50;
    cfg.num_perms = 20000;
    cfg.ts = {0.3};
    cfg.x0 = 0.25;
    cfg.alpha = 2.0;  // tie-break exponent only
    cfg.p = 1.0;
    cfg.pareto_index = 3.5;
  } else if (experiment == "lepage_stability") {
    cfg.alpha = 1.5;
    cfg.p = 0.7;
    cfg.reps = 100000;
  } else if (experiment == "bridge_crossval") {
    cfg.alpha = 1.2;
    cfg.p = 0.7;
    cfg.n = 5000;
    cfg.reps = 10000;
    cfg.ts = {0.5};
  } else if (experiment == "permutation_randomness") {
    cfg.alpha = 1.2;
    cfg.p = 0.7;
    cfg.n = 2000;
    cfg.n_small = 200;
    cfg.num_envs = 200;
    cfg.num_perms = 2000;
    cfg.draws_per_env = 2000;
    cfg.ts = {0.5, 0.3, 0.7};
    cfg.x0 = 0.5;
  } else if (experiment == "covariance_identity") {
    cfg.n = 7;
    cfg.alpha = 1.2;
    cfg.p = 0.7;
  } else if (experiment == "averaging_check") {
    cfg.alpha = 1.2;
    cfg.p = 0.7;
    cfg.n = 500;
    cfg.reps = 100000;
    cfg.ts = {0.5};
  }
  return cfg;
}

ExperimentConfig config_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config must be an object");
  if (!j.contains("experiment"))
    throw std::invalid_argument("config missing 'experiment'");
  ExperimentConfig cfg = default_config(j.at("experiment").get<std::string>());
  if (!j.contains("seed"))
    throw std::invalid_argument("config missing mandatory 'seed'");

  for (const auto& [key, value] : j.items()) {
    if (key == "experiment") {
      // already applied
    } else if (key == "seed") {
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "alpha") {
      cfg.alpha = value.get<double>();
    } else if (key == "p") {
      cfg.p = value.get<double>();
    } else if (key == "law") {
      cfg.law = value.get<std::string>();
    } else if (key == "pareto_index") {
      cfg.pareto_index = value.get<double>();
    } else if (key == "parts") {
      cfg.parts = value.get<std::string>();
    } else if (key == "n") {
      cfg.n = value.get<std::uint64_t>();
    } else if (key == "n_small") {
      cfg.n_small = value.get<std::uint64_t>();
    } else if (key == "reps") {
      cfg.reps = value.get<std::uint64_t>();
    } else if (key == "num_perms") {
      cfg.num_perms = value.get<std::uint64_t>();
    } else if (key == "num_envs") {
      cfg.num_envs = value.get<std::uint64_t>();
    } else if (key == "draws_per_env") {
      cfg.draws_per_env = value.get<std::uint64_t>();
    } else if (key == "k_truncation") {
      cfg.k_truncation = value.get<std::uint64_t>();
    } else if (key == "ts") {
      cfg.ts = value.get<std::vector<double>>();
    } else if (key == "x0") {
      cfg.x0 = value.get<double>();
    } else if (key == "threads") {
      cfg.threads = value.get<unsigned>();
    } else if (key == "output_path") {
      cfg.output_path = value.get<std::string>();
    } else if (key == "format") {
      cfg.format = value.get<std::string>();
    } else if (key == "tolerances") {
      for (const auto& [tk, tv] : value.items())
        cfg.tolerances[tk] = tv.get<double>();
    } else {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  if (cfg.format != "csv" && cfg.format != "json")
    throw std::invalid_argument("format must be csv or json");
  for (double t : cfg.ts)
    if (!(t >= 0.0 && t <= 1.0))
      throw std::invalid_argument("ts entries must lie in [0,1]");
  if (cfg.reps < 1 || cfg.num_perms < 1 || cfg.num_envs < 1 ||
      cfg.draws_per_env < 1 || cfg.k_truncation < 1)
    throw std::invalid_argument("all counts must be >= 1");
  return cfg;
}

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
  json j = json::parse(config_to_json(cfg));
  // parse value as a JSON literal when possible, else as a string
  json v;
  try {
    v = json::parse(value);
  } catch (const json::parse_error&) {
    v = value;
  }
  j[key] = v;
  cfg = config_from_json_text(j.dump());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = cfg.experiment;
  j["seed"] = cfg.seed;
  j["alpha"] = cfg.alpha;
  j["p"] = cfg.p;
  j["law"] = cfg.law;
  j["pareto_index"] = cfg.pareto_index;
  j["parts"] = cfg.parts;
  j["n"] = cfg.n;
  j["n_small"] = cfg.n_small;
  j["reps"] = cfg.reps;
  j["num_perms"] = cfg.num_perms;
  j["num_envs"] = cfg.num_envs;
  j["draws_per_env"] = cfg.draws_per_env;
  j["k_truncation"] = cfg.k_truncation;
  j["ts"] = cfg.ts;
  j["x0"] = cfg.x0;
  j["threads"] = cfg.threads;
  j["output_path"] = cfg.output_path;
  j["format"] = cfg.format;
  j["tolerances"] = cfg.tolerances;
  return j.dump(2);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const unsigned threads = resolve_threads(cfg);

  ExperimentReport report;
  report.config = cfg;
  report.version = kVersion;
  report.kernel_backend = std::string(kernels::backend_name());
  report.threads_used = threads;

  if (cfg.experiment == "finite_variance")
    run_finite_variance(cfg, threads, report.metrics);
  else if (cfg.experiment == "lepage_stability")
    run_lepage_stability(cfg, threads, report.metrics);
  else if (cfg.experiment == "bridge_crossval")
    run_bridge_crossval(cfg, threads, report.metrics);
  else if (cfg.experiment == "permutation_randomness")
    run_permutation_randomness(cfg, threads, report.metrics);
  else if (cfg.experiment == "covariance_identity")
    run_covariance_identity(cfg, threads, report.metrics);
  else if (cfg.experiment == "averaging_check")
    run_averaging_check(cfg, threads, report.metrics);
  else
    throw std::invalid_argument("unknown experiment: " + cfg.experiment);

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string report_csv(const ExperimentReport& report) {
  std::string out = "metric,value,tolerance,pass\n";
  for (const auto& m : report.metrics) {
    out += m.name;
    out += ',';
    out += format_double(m.value);
    out += ',';
    if (m.tolerance) out += format_double(*m.tolerance);
    out += ',';
    if (m.pass)
      out += *m.pass ? "true" : "false";
    else
      out += "na";
    out += '\n';
  }
  return out;
}

std::string report_json_sidecar(const ExperimentReport& report) {
  json j;
  j["config"] = json::parse(config_to_json(report.config));
  j["environment"] = {{"version", report.version},
                      {"kernel_backend", report.kernel_backend},
                      {"threads", report.threads_used},
                      {"seed", report.config.seed}};
  json metrics = json::array();
  for (const auto& m : report.metrics) {
    json jm;
    jm["name"] = m.name;
    jm["value"] = m.value;
    if (m.tolerance) jm["tolerance"] = *m.tolerance;
    if (m.target) jm["target"] = *m.target;
    jm["cmp"] = m.cmp == Cmp::le ? "le" : "ge";
    if (m.pass) jm["pass"] = *m.pass;
    if (!m.note.empty()) jm["note"] = m.note;
    metrics.push_back(jm);
  }
  j["metrics"] = metrics;
  j["wall_seconds"] = report.wall_seconds;
  return j.dump(2);
}

std::vector<CsvMetricRow> parse_csv_metrics(const std::string& csv) {
  std::vector<CsvMetricRow> rows;
  std::istringstream in(csv);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      if (line != "metric,value,tolerance,pass")
        throw std::invalid_argument("unexpected CSV header: " + line);
      continue;
    }
    if (line.empty()) continue;
    std::array<std::string, 4> fields;
    std::size_t pos = 0;
    for (int f = 0; f < 4; ++f) {
      const auto comma = line.find(',', pos);
      if (f < 3 && comma == std::string::npos)
        throw std::invalid_argument("malformed CSV row: " + line);
      fields[static_cast<std::size_t>(f)] =
          line.substr(pos, comma == std::string::npos ? std::string::npos
                                                      : comma - pos);
      pos = comma + 1;
    }
    CsvMetricRow row;
    row.name = fields[0];
    const auto parse_num = [](const std::string& s) {
      double v = 0.0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc{})
        throw std::invalid_argument("bad number in CSV: " + s);
      return v;
    };
    row.value = parse_num(fields[1]);
    if (!fields[2].empty()) row.tolerance = parse_num(fields[2]);
    if (fields[3] == "true")
      row.pass = true;
    else if (fields[3] == "false")
      row.pass = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<CriterionResult> run_acceptance_suite(std::uint64_t seed,
                                                  unsigned threads) {
  std::vector<CriterionResult> results;

  const auto run_criterion =
      [&](std::string id, std::string name,
          const std::function<void(CriterionResult&)>& body) {
        const auto start = std::chrono::steady_clock::now();
        CriterionResult c;
        c.id = std::move(id);
        c.name = std::move(name);
        body(c);
        c.pass = true;
        for (const auto& m : c.metrics)
          if (m.pass.has_value() && !*m.pass) c.pass = false;
        c.wall_seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
        results.push_back(std::move(c));
      };

  const auto absorb = [](CriterionResult& c, const ExperimentReport& r,
                         std::initializer_list<std::string_view> names) {
    for (const auto& m : r.metrics)
      for (const auto n : names)
        if (m.name == n) c.metrics.push_back(m);
  };

  // C1: exact identities
  run_criterion("C1", "exact identities", [&](CriterionResult& c) {
    auto cfg = default_config("covariance_identity");
    cfg.seed = seed;
    cfg.threads = threads;
    const auto r = run_experiment(cfg);
    absorb(c, r,
           {"epsilon_moment_exact_matches", "rewriting_identity_bitexact",
            "rewriting_identity_max_rel_err"});
  });

  // C2: stable/LePage distributional suite
  run_criterion("C2", "stable/LePage distributional suite",
                [&](CriterionResult& c) {
                  for (double alpha : {0.5, 1.0, 1.5}) {
                    auto cfg = default_config("lepage_stability");
                    cfg.seed = seed;
                    cfg.threads = threads;
                    cfg.alpha = alpha;
                    cfg.p = alpha == 1.0 ? 0.5 : 0.7;
                    auto r = run_experiment(cfg);
                    for (auto m : r.metrics) {
                      if (!m.pass.has_value()) continue;
                      m.name += "_alpha_" + format_double(alpha);
                      c.metrics.push_back(std::move(m));
                    }
                  }
                });

  // C3: finite-variance baseline
  run_criterion("C3", "finite-variance baseline", [&](CriterionResult& c) {
    auto cfg = default_config("finite_variance");
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.parts = "ks";
    cfg.law = "normal";
    const auto r = run_experiment(cfg);
    absorb(c, r, {"sup_zn_ks_vs_kolmogorov", "sup_znpi_ks_vs_kolmogorov",
                  "sup_zn_quantile_95"});

    auto cfg2 = default_config("finite_variance");
    cfg2.seed = seed;
    cfg2.threads = threads;
    cfg2.parts = "spread";
    cfg2.law = "pareto";
    const auto r2 = run_experiment(cfg2);
    absorb(c, r2, {"spread_ratio_small_over_large"});
  });

  // C4: corollary/averaging cross-validation
  run_criterion("C4", "bridge limit and averaging cross-validation",
                [&](CriterionResult& c) {
                  auto cfg = default_config("bridge_crossval");
                  cfg.seed = seed;
                  cfg.threads = threads;
                  const auto r = run_experiment(cfg);
                  absorb(c, r, {"an_vs_stable_bridge_ks"});

                  auto cfg2 = default_config("averaging_check");
                  cfg2.seed = seed;
                  cfg2.threads = threads;
                  const auto r2 = run_experiment(cfg2);
                  absorb(c, r2, {"averaged_an_perm_vs_an_ks",
                                 "endpoint_degenerate_max_abs"});
                });

  // C5: headline negative result
  run_criterion("C5", "random conditional limit (headline)",
                [&](CriterionResult& c) {
                  auto cfg = default_config("permutation_randomness");
                  cfg.seed = seed;
                  cfg.threads = threads;
                  const auto r = run_experiment(cfg);
                  absorb(c, r,
                         {"spread_at_n_small", "spread_at_n_large",
                          "spread_ratio_small_over_large",
                          "conditional_cdf_match_ks", "joint_cov_worst_z"});
                  for (const auto& m : r.metrics)
                    if (m.name == "spread_at_zero_large")
                      c.metrics.push_back(m);  // informational
                });

  // C6: numerical hygiene
  run_criterion("C6", "numerical hygiene", [&](CriterionResult& c) {
    // truncation certificate at the default k for the acceptance laws
    const std::size_t k = 10000;
    for (double alpha : {0.5, 1.0, 1.2, 1.5}) {
      const stable::TailParams tp(alpha, alpha == 1.0 ? 0.5 : 0.7);
      rng::RngStream s(seed, rng::derive_key(99, 1,
                                             static_cast<std::uint64_t>(
                                                 alpha * 1000)));
      double worst = 0.0;
      for (int e = 0; e < 50; ++e) {
        const auto env = lepage::sample_environment(k, s);
        worst = std::max(worst, limit_law::tail_variance_ratio(env, tp, k));
      }
      Metric m;
      m.name = "tail_variance_ratio_alpha_" + format_double(alpha);
      m.value = worst;
      m.tolerance = 1e-6;
      m.cmp = Cmp::le;
      m.pass = worst <= 1e-6;
      m.note = "worst dropped/kept variance ratio over 50 environments";
      c.metrics.push_back(m);
    }

    // byte reproducibility: identical CSV across reruns and thread counts
    auto cfg = default_config("lepage_stability");
    cfg.seed = seed;
    cfg.alpha = 0.5;
    cfg.reps = 2000;
    cfg.k_truncation = 2000;
    cfg.threads = 1;
    const std::string a = report_csv(run_experiment(cfg));
    const std::string b = report_csv(run_experiment(cfg));
    cfg.threads = std::max(2u, threads);
    const std::string cthreads = report_csv(run_experiment(cfg));
    Metric m;
    m.name = "byte_reproducibility";
    m.value = (a == b && a == cthreads) ? 1.0 : 0.0;
    m.tolerance = 1.0;
    m.cmp = Cmp::ge;
    m.pass = m.value >= 1.0;
    m.note = "identical CSV across reruns and thread counts";
    c.metrics.push_back(m);
  });

  return results;
}

}  // namespace stablebox::experiments
