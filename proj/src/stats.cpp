#include "stablebox/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stablebox::stats {

EmpiricalDistribution EmpiricalDistribution::from_samples(
    std::vector<double> xs) {
  if (xs.empty())
    throw std::invalid_argument("empirical distribution: empty sample");
  for (double v : xs)
    if (std::isnan(v))
      throw std::invalid_argument("empirical distribution: NaN sample");
  std::sort(xs.begin(), xs.end());
  return EmpiricalDistribution(std::move(xs));
}

double EmpiricalDistribution::cdf(double x) const {
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  return static_cast<double>(it - xs_.begin()) /
         static_cast<double>(xs_.size());
}

double EmpiricalDistribution::quantile(double q) const {
  if (!(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("quantile: q outside [0,1]");
  const auto n = static_cast<double>(xs_.size());
  // If q is exactly k/n as a double, use index k; floating-point ceil of
  // q*n can otherwise land one past the intended order statistic.
  const double rounded = std::nearbyint(q * n);
  long long idx;
  if (rounded >= 1.0 && rounded <= n && rounded / n == q)
    idx = static_cast<long long>(rounded);
  else
    idx = static_cast<long long>(std::ceil(q * n));
  idx = std::max(1LL, std::min(idx, static_cast<long long>(xs_.size())));
  return xs_[static_cast<std::size_t>(idx - 1)];
}

double ks_two_sample(const EmpiricalDistribution& a,
                     const EmpiricalDistribution& b) {
  const auto& xa = a.samples();
  const auto& xb = b.samples();
  const double na = static_cast<double>(xa.size());
  const double nb = static_cast<double>(xb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xa.size() && j < xb.size()) {
    const double v = std::min(xa[i], xb[j]);
    while (i < xa.size() && xa[i] == v) ++i;
    while (j < xb.size() && xb[j] == v) ++j;
    const double gap =
        std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb);
    if (gap > d) d = gap;
  }
  // Once one sample is exhausted its CDF is 1; the largest remaining gap is
  // attained immediately, at the exhaustion point already visited above.
  return d;
}

double ks_one_sample(const EmpiricalDistribution& d,
                     const std::function<double(double)>& cdf) {
  const auto& xs = d.samples();
  const double n = static_cast<double>(xs.size());
  double stat = 0.0;
  std::size_t i = 0;
  while (i < xs.size()) {
    std::size_t j = i;
    while (j < xs.size() && xs[j] == xs[i]) ++j;
    const double f = cdf(xs[i]);
    const double below = static_cast<double>(i) / n;   // F_n just left of x
    const double at = static_cast<double>(j) / n;      // F_n at x
    stat = std::max(stat, std::max(at - f, f - below));
    i = j;
  }
  return stat;
}

double kolmogorov_cdf(double x) {
  if (x <= 0.0) return 0.0;
  double s = 0.0;
  double sign = 1.0;
  for (int k = 1;; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    if (term < 1e-12) break;
    s += sign * term;
    sign = -sign;
  }
  const double v = 1.0 - 2.0 * s;
  // Below the truncation tolerance the alternating sum is all cancellation;
  // report a clean zero there.
  if (v < 1e-12) return 0.0;
  return std::min(1.0, v);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double exact_sum(std::span<const double> xs) {
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> partials;
  for (double x : sorted) {
    std::size_t i = 0;
    for (double y : partials) {
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  double s = 0.0;
  for (double v : partials) s += v;
  return s;
}

}  // namespace stablebox::stats
