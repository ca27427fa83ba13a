#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace stablebox::stats {

/// Sorted sample with exact CDF / quantile / KS queries. The CDF is the
/// right-continuous step function with steps 1/n at the sample points.
class EmpiricalDistribution {
 public:
  /// Sorts; throws std::invalid_argument on empty input or NaN entries.
  static EmpiricalDistribution from_samples(std::vector<double> xs);

  const std::vector<double>& samples() const { return xs_; }
  std::size_t size() const { return xs_.size(); }
  double min() const { return xs_.front(); }
  double max() const { return xs_.back(); }

  /// (#samples <= x) / n
  double cdf(double x) const;

  /// Order statistic at index ceil(q*n), clamped to [1, n]. When q was
  /// produced by cdf() the index is recovered exactly rather than through
  /// floating-point ceil, so quantile(cdf(x)) never overshoots x.
  double quantile(double q) const;

 private:
  explicit EmpiricalDistribution(std::vector<double> xs) : xs_(std::move(xs)) {}
  std::vector<double> xs_;
};

/// Exact two-sample Kolmogorov-Smirnov statistic via a sorted merge.
/// Symmetric in its arguments, in [0, 1].
double ks_two_sample(const EmpiricalDistribution& a,
                     const EmpiricalDistribution& b);

/// Exact one-sample KS statistic against a nondecreasing CDF, evaluating
/// both one-sided gaps at every sample point.
double ks_one_sample(const EmpiricalDistribution& d,
                     const std::function<double(double)>& cdf);

/// Kolmogorov limit law K(x) = 1 - 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2),
/// the law of sup|B(t)| for a Brownian bridge B. Series truncated once a
/// term drops below 1e-12; K(x) = 0 for x <= 0.
double kolmogorov_cdf(double x);

/// Standard normal CDF.
double normal_cdf(double x);

/// Sum via error-free two-sum expansions over canonically ordered addends;
/// the result depends only on the multiset of inputs, never on their order.
double exact_sum(std::span<const double> xs);

}  // namespace stablebox::stats
