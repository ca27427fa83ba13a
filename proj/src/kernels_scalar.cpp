#include <cmath>
#include <cstddef>

#include "kernels_impl.hpp"
#include "stablebox/kernels_math.hpp"

// Reference backend. The lane-striped accumulation mirrors the SIMD layout
// exactly; this file must be compiled with -ffp-contract=off so the compiler
// cannot fuse the mul/add pairs that the AVX2 backend keeps separate.

namespace stablebox::kernels::scalar_impl {

namespace {

inline std::uint64_t lane_next(rng::Rng4& g, int lane) {
  auto& s = g.state_;
  const std::uint64_t result =
      ((s[0][lane] + s[3][lane]) << 23 | (s[0][lane] + s[3][lane]) >> 41) +
      s[0][lane];
  const std::uint64_t t = s[1][lane] << 17;
  s[2][lane] ^= s[0][lane];
  s[3][lane] ^= s[1][lane];
  s[1][lane] ^= s[2][lane];
  s[0][lane] ^= s[3][lane];
  s[2][lane] ^= t;
  s[3][lane] = s[3][lane] << 45 | s[3][lane] >> 19;
  return result;
}

}  // namespace

double sum(std::span<const double> x) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) acc[i & 3] += x[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc[i & 3] += a[i] * b[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double max_abs(std::span<const double> x) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = std::fabs(x[i]);
    if (v > acc[i & 3]) acc[i & 3] = v;
  }
  double m = acc[0];
  for (int l = 1; l < 4; ++l)
    if (acc[l] > m) m = acc[l];
  return m;
}

void neg_log(std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = -detail::portable_log(x[i]);
}

void pow_neg(std::span<const double> x, double exponent,
             std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = detail::portable_pow_neg(x[i], exponent);
}

void fill_uniform(rng::Rng4& g, std::span<double> out) {
  const std::size_t n = out.size();
  const std::size_t groups = (n + 3) / 4;
  for (std::size_t grp = 0; grp < groups; ++grp) {
    for (int lane = 0; lane < 4; ++lane) {
      const std::uint64_t w = lane_next(g, lane);
      const std::size_t i = 4 * grp + static_cast<std::size_t>(lane);
      if (i < n) out[i] = rng::u64_to_unit_open(w);
    }
  }
}

void fill_exponential(rng::Rng4& g, std::span<double> out) {
  const std::size_t n = out.size();
  const std::size_t groups = (n + 3) / 4;
  for (std::size_t grp = 0; grp < groups; ++grp) {
    for (int lane = 0; lane < 4; ++lane) {
      const std::uint64_t w = lane_next(g, lane);
      const std::size_t i = 4 * grp + static_cast<std::size_t>(lane);
      if (i < n) out[i] = -detail::portable_log(rng::u64_to_unit_open(w));
    }
  }
}

double select_weighted_sum(std::span<const double> z,
                           std::span<const double> u, double threshold,
                           double hi, double lo) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double w = (u[i] < threshold) ? hi : lo;
    acc[i & 3] += z[i] * w;
  }
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

}  // namespace stablebox::kernels::scalar_impl
