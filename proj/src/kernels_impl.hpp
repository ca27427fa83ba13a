#pragma once

#include <span>

#include "stablebox/rng.hpp"

// Backend entry points; see kernels.hpp for the shared semantics contract.

namespace stablebox::kernels::scalar_impl {
double sum(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> x);
void neg_log(std::span<const double> x, std::span<double> out);
void pow_neg(std::span<const double> x, double exponent, std::span<double> out);
void fill_uniform(rng::Rng4& g, std::span<double> out);
void fill_exponential(rng::Rng4& g, std::span<double> out);
double select_weighted_sum(std::span<const double> z, std::span<const double> u,
                           double threshold, double hi, double lo);
}  // namespace stablebox::kernels::scalar_impl

#if defined(__x86_64__) || defined(_M_X64)
#define STABLEBOX_HAVE_AVX2_BACKEND 1
namespace stablebox::kernels::avx2_impl {
double sum(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> x);
void neg_log(std::span<const double> x, std::span<double> out);
void pow_neg(std::span<const double> x, double exponent, std::span<double> out);
void fill_uniform(rng::Rng4& g, std::span<double> out);
void fill_exponential(rng::Rng4& g, std::span<double> out);
double select_weighted_sum(std::span<const double> z, std::span<const double> u,
                           double threshold, double hi, double lo);
}  // namespace stablebox::kernels::avx2_impl
#else
#define STABLEBOX_HAVE_AVX2_BACKEND 0
#endif
