#include "stablebox/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "kernels_impl.hpp"

namespace stablebox::kernels {

namespace {

struct Table {
  double (*sum)(std::span<const double>);
  double (*dot)(std::span<const double>, std::span<const double>);
  double (*max_abs)(std::span<const double>);
  void (*neg_log)(std::span<const double>, std::span<double>);
  void (*pow_neg)(std::span<const double>, double, std::span<double>);
  void (*fill_uniform)(rng::Rng4&, std::span<double>);
  void (*fill_exponential)(rng::Rng4&, std::span<double>);
  double (*select_weighted_sum)(std::span<const double>,
                                std::span<const double>, double, double,
                                double);
};

constexpr Table kScalarTable{
    scalar_impl::sum,          scalar_impl::dot,
    scalar_impl::max_abs,      scalar_impl::neg_log,
    scalar_impl::pow_neg,      scalar_impl::fill_uniform,
    scalar_impl::fill_exponential, scalar_impl::select_weighted_sum};

#if STABLEBOX_HAVE_AVX2_BACKEND
constexpr Table kAvx2Table{
    avx2_impl::sum,          avx2_impl::dot,
    avx2_impl::max_abs,      avx2_impl::neg_log,
    avx2_impl::pow_neg,      avx2_impl::fill_uniform,
    avx2_impl::fill_exponential, avx2_impl::select_weighted_sum};
#endif

struct Active {
  const Table* table;
  Backend backend;
};

Active resolve_default() {
  if (const char* env = std::getenv("STABLE_BOX_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return {&kScalarTable, Backend::scalar};
#if STABLEBOX_HAVE_AVX2_BACKEND
    if (std::strcmp(env, "avx2") == 0 && backend_supported(Backend::avx2))
      return {&kAvx2Table, Backend::avx2};
#endif
  }
#if STABLEBOX_HAVE_AVX2_BACKEND
  if (backend_supported(Backend::avx2)) return {&kAvx2Table, Backend::avx2};
#endif
  return {&kScalarTable, Backend::scalar};
}

Active& active() {
  static Active a = resolve_default();
  return a;
}

}  // namespace

bool backend_supported(Backend b) {
  if (b == Backend::scalar) return true;
#if STABLEBOX_HAVE_AVX2_BACKEND
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

Backend active_backend() { return active().backend; }

void force_backend(Backend b) {
  if (!backend_supported(b))
    throw std::runtime_error("kernel backend not supported on this host");
  if (b == Backend::scalar) {
    active() = {&kScalarTable, Backend::scalar};
    return;
  }
#if STABLEBOX_HAVE_AVX2_BACKEND
  active() = {&kAvx2Table, Backend::avx2};
#endif
}

std::string_view backend_name() {
  return active().backend == Backend::avx2 ? "avx2" : "scalar";
}

double sum(std::span<const double> x) { return active().table->sum(x); }

double dot(std::span<const double> a, std::span<const double> b) {
  return active().table->dot(a, b);
}

double max_abs(std::span<const double> x) { return active().table->max_abs(x); }

void neg_log(std::span<const double> x, std::span<double> out) {
  active().table->neg_log(x, out);
}

void pow_neg(std::span<const double> x, double exponent,
             std::span<double> out) {
  active().table->pow_neg(x, exponent, out);
}

void fill_uniform(rng::Rng4& g, std::span<double> out) {
  active().table->fill_uniform(g, out);
}

void fill_exponential(rng::Rng4& g, std::span<double> out) {
  active().table->fill_exponential(g, out);
}

double select_weighted_sum(std::span<const double> z,
                           std::span<const double> u, double threshold,
                           double hi, double lo) {
  return active().table->select_weighted_sum(z, u, threshold, hi, lo);
}

}  // namespace stablebox::kernels
