#include "stablebox/permutation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "stablebox/kernels.hpp"

namespace stablebox::permutation {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  const auto wide = static_cast<__int128>(a) * b;
  if (wide > INT64_MAX || wide < INT64_MIN)
    throw std::overflow_error("rational arithmetic overflow");
  return static_cast<std::int64_t>(wide);
}

void require_distinct(const std::vector<double>& x) {
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument(
        "data contains ties; apply tie_break before selecting order "
        "statistics");
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

Rational Rational::operator+(const Rational& o) const {
  return Rational(checked_mul(num, o.den) + checked_mul(o.num, den),
                  checked_mul(den, o.den));
}

Rational Rational::operator-(const Rational& o) const {
  return Rational(checked_mul(num, o.den) - checked_mul(o.num, den),
                  checked_mul(den, o.den));
}

Rational Rational::operator*(const Rational& o) const {
  return Rational(checked_mul(num, o.num), checked_mul(den, o.den));
}

std::vector<std::uint32_t> random_permutation(std::size_t n,
                                              rng::RngStream& stream) {
  if (n < 1) throw std::invalid_argument("random_permutation: n < 1");
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const auto k = j + stream.below(n - j);
    std::swap(perm[j], perm[k]);
  }
  return perm;
}

SelectionIndicators epsilon_indicators(const cusum::Realization& r,
                                       std::span<const std::uint32_t> perm,
                                       cusum::RationalT t) {
  const std::size_t n = r.n();
  if (perm.size() != n)
    throw std::invalid_argument("epsilon_indicators: permutation length");
  require_distinct(r.x);

  // rank[i] = rank of x[i] among the order statistics (0-based)
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return r.x[a] < r.x[b]; });
  std::vector<std::uint32_t> rank(n);
  for (std::uint32_t j = 0; j < n; ++j) rank[order[j]] = j;

  const std::size_t m = cusum::floor_nt(t, n);
  SelectionIndicators ind{std::vector<std::uint8_t>(n, 0), t, m};
  for (std::size_t j = 0; j < m; ++j) ind.eps[rank[perm[j]]] = 1;
  return ind;
}

EpsilonMoments epsilon_moments(std::size_t n, cusum::RationalT t) {
  if (n < 2) throw std::invalid_argument("epsilon_moments: n < 2");
  const auto m = static_cast<std::int64_t>(cusum::floor_nt(t, n));
  const auto ni = static_cast<std::int64_t>(n);
  const Rational frac(m, ni);
  const Rational variance = frac - frac * frac;
  const Rational covariance =
      Rational(-checked_mul(m, ni - m), checked_mul(checked_mul(ni, ni), ni - 1));
  return {variance, covariance};
}

EpsilonCrossMoments epsilon_cross_moments(std::size_t n, cusum::RationalT t1,
                                          cusum::RationalT t2) {
  if (n < 2) throw std::invalid_argument("epsilon_cross_moments: n < 2");
  auto m1 = static_cast<std::int64_t>(cusum::floor_nt(t1, n));
  auto m2 = static_cast<std::int64_t>(cusum::floor_nt(t2, n));
  if (m1 > m2) std::swap(m1, m2);
  const auto ni = static_cast<std::int64_t>(n);
  const Rational prod(checked_mul(m1, m2), checked_mul(ni, ni));
  const Rational same = Rational(m1, ni) - prod;
  const Rational cross =
      Rational(checked_mul(m1, m2 - 1), checked_mul(ni, ni - 1)) - prod;
  return {same, cross};
}

PermutedStatSampler::PermutedStatSampler(const cusum::Realization& r,
                                         cusum::RationalT t)
    : x_(r.x), idx_(r.n()) {
  const auto n = static_cast<double>(r.n());
  std::iota(idx_.begin(), idx_.end(), 0u);
  mean_ = kernels::sum(x_) / n;
  denom_ = cusum::t_n(r);
  m_ = cusum::floor_nt(t, r.n());
  // Var_X A_{n,pi}(t) = m(n-m)/(n(n-1)) * sum (x - mean)^2 / T^2
  double ss = 0.0;
  for (double v : x_) ss += (v - mean_) * (v - mean_);
  const auto m = static_cast<double>(m_);
  cond_var_ = m * (n - m) / (n * (n - 1.0)) * ss / (denom_ * denom_);
}

double PermutedStatSampler::draw(rng::RngStream& stream) {
  // Partial Fisher-Yates: after m swaps the prefix is a uniform m-subset in
  // uniform order, whatever arrangement the previous draw left behind.
  const std::size_t n = idx_.size();
  double s = 0.0;
  for (std::size_t j = 0; j < m_; ++j) {
    const auto k = j + stream.below(n - j);
    std::swap(idx_[j], idx_[k]);
    s += x_[idx_[j]];
  }
  return (s - static_cast<double>(m_) * mean_) / denom_;
}

double PermutedStatSampler::conditional_sd() const {
  return std::sqrt(cond_var_);
}

ConditionalCdfEstimate conditional_cdf_estimate(const cusum::Realization& r,
                                                cusum::RationalT t,
                                                std::vector<double> xs,
                                                std::uint64_t num_perms,
                                                rng::RngStream& stream) {
  if (num_perms < 1)
    throw std::invalid_argument("conditional_cdf_estimate: num_perms < 1");
  PermutedStatSampler sampler(r, t);
  std::vector<double> values(num_perms);
  for (auto& v : values) v = sampler.draw(stream);
  std::sort(values.begin(), values.end());

  ConditionalCdfEstimate est;
  est.t = t;
  est.xs = std::move(xs);
  est.num_perms = num_perms;
  est.exact = false;
  est.probs.reserve(est.xs.size());
  for (double x : est.xs) {
    const auto it = std::upper_bound(values.begin(), values.end(), x);
    est.probs.push_back(static_cast<double>(it - values.begin()) /
                        static_cast<double>(num_perms));
  }
  return est;
}

ConditionalCdfEstimate enumerate_permutation_distribution(
    const cusum::Realization& r, cusum::RationalT t) {
  const std::size_t n = r.n();
  if (n > 8)
    throw std::invalid_argument(
        "enumerate_permutation_distribution: n > 8 (factorial blow-up guard)");
  require_distinct(r.x);

  const std::size_t m = cusum::floor_nt(t, n);
  const double mean = kernels::sum(r.x) / static_cast<double>(n);
  const double denom = cusum::t_n(r);
  const double frac = static_cast<double>(m) / static_cast<double>(n);
  const double full = [&] {
    double s = 0.0;
    for (double v : r.x) s += v - mean;
    return s;
  }();

  // All m-subsets; each carries the same permutation mass m!(n-m)!/n!.
  std::vector<std::pair<double, std::int64_t>> atoms;  // value, count
  std::vector<bool> selector(n, false);
  std::fill(selector.begin(), selector.begin() + static_cast<long>(m), true);
  std::int64_t total = 0;
  // iterate over subsets via prev_permutation on the selector mask
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (selector[i]) s += r.x[i] - mean;
    atoms.emplace_back((s - frac * full) / denom, 1);
    ++total;
  } while (std::prev_permutation(selector.begin(), selector.end()));

  std::sort(atoms.begin(), atoms.end());
  ConditionalCdfEstimate est;
  est.t = t;
  est.exact = true;
  est.num_perms = 0;
  std::int64_t cum = 0;
  for (std::size_t i = 0; i < atoms.size();) {
    std::size_t j = i;
    std::int64_t count = 0;
    while (j < atoms.size() && atoms[j].first == atoms[i].first) {
      count += atoms[j].second;
      ++j;
    }
    cum += count;
    est.xs.push_back(atoms[i].first);
    est.exact_probs.push_back(Rational(cum, total));
    est.probs.push_back(est.exact_probs.back().value());
    i = j;
  }
  return est;
}

}  // namespace stablebox::permutation
