#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "stablebox/rng.hpp"

namespace stablebox::stable {

/// Parameters of a strictly alpha-stable law. beta is the skewness and
/// scale_c the scale constant; beta is normalized to 0 when alpha is 1
/// (only the symmetric Cauchy case is strictly stable without recentering)
/// and when alpha is 2 (the skewness has no effect there).
struct StableParams {
  double alpha;
  double beta;
  double scale_c;

  StableParams(double alpha_, double beta_, double scale_c_ = 1.0);
};

/// Tail index and right-tail weight of the two-sided Pareto family used as
/// the concrete member of the stable domain of attraction:
///   P{X > y} = p * y^-alpha,  P{X < -y} = q * y^-alpha   for y >= 1.
/// alpha = 1 requires p = 1/2 (the symmetric case; anything else would need
/// nonlinear centering).
struct TailParams {
  double alpha;
  double p;

  TailParams(double alpha_, double p_);

  double q() const { return 1.0 - p; }
  double skewness() const { return 2.0 * p - 1.0; }
  double w1() const;  // q^(1/alpha), weight of the lower tail
  double w2() const;  // p^(1/alpha), weight of the upper tail
};

/// Characteristic function phi(t) of the strictly stable law:
///   alpha = 2:            exp(-c t^2 / 2)
///   alpha in (0,1)u(1,2): exp(-c|t|^alpha [1 - i beta sgn(t) tan(pi alpha/2)])
///   alpha = 1:            exp(-c|t|)
std::complex<double> characteristic_fn(const StableParams& params, double t);

/// i.i.d. draws whose law has characteristic function
/// characteristic_fn(params, .). Exact transform method (uniform angle plus
/// an exponential), independent of any series representation.
std::vector<double> sample_stable(const StableParams& params,
                                  std::size_t count, rng::RngStream& stream);

/// i.i.d. two-sided Pareto draws with P{X > y} = p y^-index for y >= 1.
/// index may be any positive value; indexes above 2 give the finite-variance
/// regime used as a comparison baseline.
std::vector<double> sample_two_sided_pareto(double index, double p,
                                            std::size_t count,
                                            rng::RngStream& stream);

/// Domain-of-attraction sampler for params (index restricted to (0,2)).
std::vector<double> sample_domain_of_attraction(const TailParams& params,
                                                std::size_t count,
                                                rng::RngStream& stream);

/// Mean of the two-sided Pareto law: (p-q)*alpha/(alpha-1) for alpha > 1,
/// 0 for alpha = 1 (symmetric), and no value for alpha < 1 where the mean
/// does not exist and no centering is needed.
std::optional<double> analytic_mean(const TailParams& params);

}  // namespace stablebox::stable
