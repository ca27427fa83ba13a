#pragma once

#include <span>
#include <string_view>

#include "stablebox/rng.hpp"

// Block kernels for the Monte Carlo inner loops: reductions, elementwise
// power transforms and RNG-fed selection sums. Every kernel has a scalar
// reference implementation and, on x86-64 with AVX2, a vectorized variant
// selected at runtime. The two backends are bit-identical: reductions use
// four lane accumulators (element i goes to lane i mod 4, lanes combined as
// (a0+a1)+(a2+a3)), RNG-fed kernels draw lane l of an Rng4 for elements
// congruent to l mod 4 and always advance all four lanes ceil(n/4) steps,
// and elementwise transforms share the op sequence in kernels_math.hpp.
//
// The backend is picked once at first use (env STABLE_BOX_KERNELS=scalar|avx2
// overrides CPU detection) and can be switched explicitly in tests.

namespace stablebox::kernels {

enum class Backend { scalar, avx2 };

bool backend_supported(Backend b);
Backend active_backend();
void force_backend(Backend b);  // throws std::runtime_error if unsupported
std::string_view backend_name();

/// Sum of x.
double sum(std::span<const double> x);

/// Dot product; a and b must have equal length.
double dot(std::span<const double> a, std::span<const double> b);

/// max_i |x_i|; 0 for empty input.
double max_abs(std::span<const double> x);

/// out_i = -log(x_i); x_i must be positive normal doubles.
void neg_log(std::span<const double> x, std::span<double> out);

/// out_i = x_i^(-exponent); x_i positive normal, exponent >= 0.
void pow_neg(std::span<const double> x, double exponent, std::span<double> out);

/// Fills out with uniforms on (0,1); element i comes from lane i mod 4.
void fill_uniform(rng::Rng4& g, std::span<double> out);

/// Fills out with unit-mean exponentials (-log of a fresh uniform).
void fill_exponential(rng::Rng4& g, std::span<double> out);

/// sum_i z_i * (u_i < threshold ? hi : lo); z and u must have equal length.
double select_weighted_sum(std::span<const double> z, std::span<const double> u,
                           double threshold, double hi, double lo);

}  // namespace stablebox::kernels
