#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stablebox/cusum.hpp"
#include "stablebox/rng.hpp"

namespace stablebox::permutation {

/// Exact fraction with int64 numerator/denominator, always normalized
/// (gcd reduced, denominator positive). Large enough for every moment and
/// enumeration probability handled here; overflow throws.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d);

  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  bool operator==(const Rational& o) const = default;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Uniform random permutation of {0,..,n-1} via Fisher-Yates.
std::vector<std::uint32_t> random_permutation(std::size_t n,
                                              rng::RngStream& stream);

/// eps[j] = 1 iff the (j+1)-th smallest order statistic appears among the
/// first floor(n*t) permuted positions. Requires all-distinct data
/// (tie_break first); sum of eps is exactly floor(n*t).
struct SelectionIndicators {
  std::vector<std::uint8_t> eps;
  cusum::RationalT t;
  std::size_t m;  // floor(n*t)
};

SelectionIndicators epsilon_indicators(const cusum::Realization& r,
                                       std::span<const std::uint32_t> perm,
                                       cusum::RationalT t);

/// Exact moments of the centered indicators eps_j - m/n over a uniform
/// permutation: variance m/n - (m/n)^2 and, for j != k, covariance
/// -m(n-m)/(n^2 (n-1)).
struct EpsilonMoments {
  Rational variance;
  Rational covariance;
};

EpsilonMoments epsilon_moments(std::size_t n, cusum::RationalT t);

/// Cross-time moments for t1 <= t2 (m1 = floor(n*t1), m2 = floor(n*t2)):
/// Cov(eps_j(t1), eps_j(t2)) = m1/n - m1 m2/n^2 and, for j != k,
/// Cov(eps_j(t1), eps_k(t2)) = m1(m2-1)/(n(n-1)) - m1 m2/n^2.
struct EpsilonCrossMoments {
  Rational same_index;
  Rational cross_index;
};

EpsilonCrossMoments epsilon_cross_moments(std::size_t n, cusum::RationalT t1,
                                          cusum::RationalT t2);

/// Estimated (or exact) conditional distribution of the permuted statistic
/// at time t, with the realization held fixed: probs[i] estimates
/// P_X{ A_{n,pi}(t) <= xs[i] }. exact is true only for full enumeration,
/// in which case exact_probs carries the atomwise-exact cumulative masses.
struct ConditionalCdfEstimate {
  std::uint64_t realization_id = 0;
  cusum::RationalT t{0, 1};
  std::vector<double> xs;
  std::vector<double> probs;
  std::vector<Rational> exact_probs;
  std::uint64_t num_perms = 0;
  bool exact = false;
};

/// Draws the permuted statistic A_{n,pi}(t) repeatedly for one fixed
/// realization. Only the selected index set matters at a fixed t, so each
/// draw is an O(floor(n*t)) partial Fisher-Yates selection rather than a
/// full shuffle.
class PermutedStatSampler {
 public:
  PermutedStatSampler(const cusum::Realization& r, cusum::RationalT t);
  double draw(rng::RngStream& stream);
  double conditional_sd() const;  // exact, from the epsilon moments

 private:
  std::vector<double> x_;
  std::vector<std::uint32_t> idx_;
  double mean_;
  double denom_;
  double cond_var_;
  std::size_t m_;
};

/// Monte Carlo estimate of the conditional CDF at the points xs.
ConditionalCdfEstimate conditional_cdf_estimate(const cusum::Realization& r,
                                                cusum::RationalT t,
                                                std::vector<double> xs,
                                                std::uint64_t num_perms,
                                                rng::RngStream& stream);

/// Exact conditional distribution over all n! permutations, n <= 8. The
/// statistic depends on the permutation only through the selected index
/// set, so the enumeration runs over the C(n, floor(n*t)) subsets.
ConditionalCdfEstimate enumerate_permutation_distribution(
    const cusum::Realization& r, cusum::RationalT t);

}  // namespace stablebox::permutation
