#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

// Portable log/exp used by the block kernels. Both the scalar reference
// backend and the SIMD backends evaluate exactly this operation sequence,
// which is what makes their outputs bit-identical. Inputs are restricted to
// finite, strictly positive normal doubles; exp flushes results below the
// normal range to zero and saturates to +inf above it.

namespace stablebox::kernels::detail {

inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kInvLn2 = 1.44269504088896338700e+00;
inline constexpr double kSqrt2 = 1.41421356237309514547;

// fdlibm e_log.c minimax coefficients
inline constexpr double kLg1 = 6.666666666666735130e-01;
inline constexpr double kLg2 = 3.999999999940941908e-01;
inline constexpr double kLg3 = 2.857142874366239149e-01;
inline constexpr double kLg4 = 2.222219843214978396e-01;
inline constexpr double kLg5 = 1.818357216161805012e-01;
inline constexpr double kLg6 = 1.531383769920937332e-01;
inline constexpr double kLg7 = 1.479819860511658591e-01;

// fdlibm e_exp.c rational coefficients
inline constexpr double kExpP1 = 1.66666666666666019037e-01;
inline constexpr double kExpP2 = -2.77777777770155933842e-03;
inline constexpr double kExpP3 = 6.61375632143793436117e-05;
inline constexpr double kExpP4 = -1.65339022054652515390e-06;
inline constexpr double kExpP5 = 4.13813679705723846039e-08;

inline constexpr double kExpSaturate = 709.782712893383973096;
inline constexpr double kExpFlushToZero = -708.0;

inline double portable_log(double x) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  int e = static_cast<int>((bits >> 52) & 0x7FFu) - 1023;
  double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFULL) |
                                   0x3FF0000000000000ULL);
  if (m >= kSqrt2) {
    m *= 0.5;
    e += 1;
  }
  const double f = m - 1.0;
  const double s = f / (2.0 + f);
  const double z = s * s;
  const double w = z * z;
  const double t1 = w * (kLg2 + w * (kLg4 + w * kLg6));
  const double t2 = z * (kLg1 + w * (kLg3 + w * (kLg5 + w * kLg7)));
  const double r = t1 + t2;
  const double hfsq = 0.5 * f * f;
  const double de = static_cast<double>(e);
  return de * kLn2Hi - ((hfsq - (s * (hfsq + r) + de * kLn2Lo)) - f);
}

inline double portable_exp(double x) {
  if (x >= kExpSaturate) return std::numeric_limits<double>::infinity();
  if (x <= kExpFlushToZero) return 0.0;
  const double k = std::nearbyint(x * kInvLn2);
  const double hi = x - k * kLn2Hi;
  const double lo = k * kLn2Lo;
  const double r = hi - lo;
  const double t = r * r;
  const double c =
      r - t * (kExpP1 +
               t * (kExpP2 + t * (kExpP3 + t * (kExpP4 + t * kExpP5))));
  const double er = 1.0 - ((lo - (r * c) / (2.0 - c)) - hi);
  const auto ki = static_cast<std::int64_t>(k);
  return std::bit_cast<double>(std::bit_cast<std::uint64_t>(er) +
                               (static_cast<std::uint64_t>(ki) << 52));
}

inline double portable_pow_neg(double x, double exponent) {
  return portable_exp(-exponent * portable_log(x));
}

}  // namespace stablebox::kernels::detail
