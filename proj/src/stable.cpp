#include "stablebox/stable.hpp"

#include <cmath>
#include <stdexcept>

#include "stablebox/kernels.hpp"

namespace stablebox::stable {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

StableParams::StableParams(double alpha_, double beta_, double scale_c_)
    : alpha(alpha_), beta(beta_), scale_c(scale_c_) {
  if (!(alpha > 0.0 && alpha <= 2.0))
    throw std::invalid_argument("StableParams: alpha must be in (0,2]");
  if (!(beta >= -1.0 && beta <= 1.0))
    throw std::invalid_argument("StableParams: beta must be in [-1,1]");
  if (!(scale_c > 0.0))
    throw std::invalid_argument("StableParams: scale must be positive");
  if (alpha == 1.0 || alpha == 2.0) beta = 0.0;
}

TailParams::TailParams(double alpha_, double p_) : alpha(alpha_), p(p_) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw std::invalid_argument("TailParams: alpha must be in (0,2)");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("TailParams: p must be in [0,1]");
  if (alpha == 1.0 && p != 0.5)
    throw std::invalid_argument("TailParams: alpha = 1 requires p = 1/2");
}

double TailParams::w1() const { return std::pow(q(), 1.0 / alpha); }
double TailParams::w2() const { return std::pow(p, 1.0 / alpha); }

std::complex<double> characteristic_fn(const StableParams& params, double t) {
  const double a = params.alpha;
  const double c = params.scale_c;
  if (t == 0.0) return {1.0, 0.0};
  if (a == 2.0) return {std::exp(-c * t * t / 2.0), 0.0};
  if (a == 1.0) return {std::exp(-c * std::fabs(t)), 0.0};
  const double sgn = (t > 0.0) ? 1.0 : -1.0;
  const std::complex<double> exponent =
      -c * std::pow(std::fabs(t), a) *
      std::complex<double>(1.0, -params.beta * sgn * std::tan(kPi * a / 2.0));
  return std::exp(exponent);
}

std::vector<double> sample_stable(const StableParams& params,
                                  std::size_t count, rng::RngStream& stream) {
  if (count < 1) throw std::invalid_argument("sample_stable: count < 1");
  std::vector<double> out(count);
  const double a = params.alpha;
  const double c = params.scale_c;

  if (a == 2.0) {
    const double s = std::sqrt(c);
    for (auto& v : out) v = s * stream.normal();
    return out;
  }
  if (a == 1.0) {
    for (auto& v : out) v = c * std::tan(kPi * (stream.uniform() - 0.5));
    return out;
  }

  // Chambers-Mallows-Stuck for the strictly stable law with characteristic
  // function exp(-|t|^a [1 - i b sgn(t) tan(pi a/2)]); scale enters as c^(1/a).
  const double tan_half = std::tan(kPi * a / 2.0);
  const double b0 = std::atan(params.beta * tan_half) / a;
  const double s0 =
      std::pow(1.0 + params.beta * params.beta * tan_half * tan_half,
               1.0 / (2.0 * a));
  const double scale = std::pow(c, 1.0 / a);
  for (auto& v : out) {
    const double vang = kPi * (stream.uniform() - 0.5);
    const double w = stream.exponential();
    const double x = s0 * std::sin(a * (vang + b0)) /
                     std::pow(std::cos(vang), 1.0 / a) *
                     std::pow(std::cos(vang - a * (vang + b0)) / w,
                              (1.0 - a) / a);
    v = scale * x;
  }
  return out;
}

std::vector<double> sample_two_sided_pareto(double index, double p,
                                            std::size_t count,
                                            rng::RngStream& stream) {
  if (!(index > 0.0))
    throw std::invalid_argument("pareto sampler: index must be positive");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("pareto sampler: p must be in [0,1]");
  if (count < 1) throw std::invalid_argument("pareto sampler: count < 1");

  std::vector<double> sign_u(count);
  std::vector<double> mag_u(count);
  std::vector<double> out(count);
  rng::Rng4 g(stream.next_u64(), stream.next_u64());
  kernels::fill_uniform(g, sign_u);
  kernels::fill_uniform(g, mag_u);
  kernels::pow_neg(mag_u, 1.0 / index, out);
  for (std::size_t i = 0; i < count; ++i)
    if (!(sign_u[i] < p)) out[i] = -out[i];
  return out;
}

std::vector<double> sample_domain_of_attraction(const TailParams& params,
                                                std::size_t count,
                                                rng::RngStream& stream) {
  return sample_two_sided_pareto(params.alpha, params.p, count, stream);
}

std::optional<double> analytic_mean(const TailParams& params) {
  if (params.alpha > 1.0)
    return (params.p - params.q()) * params.alpha / (params.alpha - 1.0);
  if (params.alpha == 1.0) return 0.0;
  return std::nullopt;
}

}  // namespace stablebox::stable
