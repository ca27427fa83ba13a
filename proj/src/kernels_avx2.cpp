#include "kernels_impl.hpp"

#if STABLEBOX_HAVE_AVX2_BACKEND

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <cstring>

#include "stablebox/kernels_math.hpp"

// AVX2 backend. Compiled with -mavx2 -ffp-contract=off; every arithmetic
// step mirrors the scalar reference (see kernels.hpp for the contract), so
// outputs match the scalar backend bit for bit. Scalar epilogues reuse the
// shared portable_* routines, which compile to the same IEEE op sequence.

namespace stablebox::kernels::avx2_impl {

namespace {

using detail::portable_log;
using detail::portable_pow_neg;

inline __m256i rotl64(__m256i x, int k) {
  return _mm256_or_si256(_mm256_slli_epi64(x, k), _mm256_srli_epi64(x, 64 - k));
}

struct RngState {
  __m256i s0, s1, s2, s3;

  explicit RngState(const rng::Rng4& g) {
    s0 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(g.state_[0].data()));
    s1 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(g.state_[1].data()));
    s2 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(g.state_[2].data()));
    s3 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(g.state_[3].data()));
  }

  void store(rng::Rng4& g) const {
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(g.state_[0].data()), s0);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(g.state_[1].data()), s1);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(g.state_[2].data()), s2);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(g.state_[3].data()), s3);
  }

  __m256i next() {
    const __m256i result =
        _mm256_add_epi64(rotl64(_mm256_add_epi64(s0, s3), 23), s0);
    const __m256i t = _mm256_slli_epi64(s1, 17);
    s2 = _mm256_xor_si256(s2, s0);
    s3 = _mm256_xor_si256(s3, s1);
    s1 = _mm256_xor_si256(s1, s2);
    s0 = _mm256_xor_si256(s0, s3);
    s2 = _mm256_xor_si256(s2, t);
    s3 = rotl64(s3, 45);
    return result;
  }
};

// double(v) for int64 lanes with |v| < 2^51
inline __m256d int64_to_pd(__m256i v) {
  const __m256i magic = _mm256_set1_epi64x(0x4338000000000000LL);
  return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_add_epi64(v, magic)),
                       _mm256_set1_pd(0x1.8p52));
}

// int64(k) for integer-valued doubles with |k| < 2^51
inline __m256i pd_to_int64(__m256d k) {
  const __m256i magic = _mm256_set1_epi64x(0x4338000000000000LL);
  return _mm256_sub_epi64(
      _mm256_castpd_si256(_mm256_add_pd(k, _mm256_set1_pd(0x1.8p52))), magic);
}

// (double(x >> 12) + 0.5) * 2^-52, exactly as the scalar conversion
inline __m256d u64_to_unit_open(__m256i x) {
  const __m256i x12 = _mm256_srli_epi64(x, 12);
  const __m256i magic = _mm256_set1_epi64x(0x4330000000000000LL);
  const __m256d d = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(x12, magic)), _mm256_set1_pd(0x1p52));
  return _mm256_mul_pd(_mm256_add_pd(d, _mm256_set1_pd(0.5)),
                       _mm256_set1_pd(0x1p-52));
}

inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  __m256i e = _mm256_sub_epi64(
      _mm256_and_si256(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(0x7FF)),
      _mm256_set1_epi64x(1023));
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(
      _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
      _mm256_set1_epi64x(0x3FF0000000000000LL)));
  const __m256d ge = _mm256_cmp_pd(m, _mm256_set1_pd(detail::kSqrt2), _CMP_GE_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), ge);
  e = _mm256_sub_epi64(e, _mm256_castpd_si256(ge));  // mask lanes are -1

  const __m256d f = _mm256_sub_pd(m, _mm256_set1_pd(1.0));
  const __m256d s = _mm256_div_pd(f, _mm256_add_pd(_mm256_set1_pd(2.0), f));
  const __m256d z = _mm256_mul_pd(s, s);
  const __m256d w = _mm256_mul_pd(z, z);
  const __m256d t1 = _mm256_mul_pd(
      w, _mm256_add_pd(
             _mm256_set1_pd(detail::kLg2),
             _mm256_mul_pd(w, _mm256_add_pd(_mm256_set1_pd(detail::kLg4),
                                            _mm256_mul_pd(w, _mm256_set1_pd(
                                                                 detail::kLg6))))));
  const __m256d t2 = _mm256_mul_pd(
      z,
      _mm256_add_pd(
          _mm256_set1_pd(detail::kLg1),
          _mm256_mul_pd(
              w, _mm256_add_pd(
                     _mm256_set1_pd(detail::kLg3),
                     _mm256_mul_pd(
                         w, _mm256_add_pd(
                                _mm256_set1_pd(detail::kLg5),
                                _mm256_mul_pd(w, _mm256_set1_pd(detail::kLg7))))))));
  const __m256d r = _mm256_add_pd(t1, t2);
  const __m256d hfsq =
      _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(0.5), f), f);
  const __m256d de = int64_to_pd(e);

  const __m256d ta = _mm256_mul_pd(de, _mm256_set1_pd(detail::kLn2Hi));
  const __m256d tb = _mm256_mul_pd(s, _mm256_add_pd(hfsq, r));
  const __m256d tc = _mm256_mul_pd(de, _mm256_set1_pd(detail::kLn2Lo));
  const __m256d inner = _mm256_sub_pd(hfsq, _mm256_add_pd(tb, tc));
  return _mm256_sub_pd(ta, _mm256_sub_pd(inner, f));
}

inline __m256d exp_pd(__m256d x) {
  const __m256d sat_mask =
      _mm256_cmp_pd(x, _mm256_set1_pd(detail::kExpSaturate), _CMP_GE_OQ);
  const __m256d zero_mask =
      _mm256_cmp_pd(x, _mm256_set1_pd(detail::kExpFlushToZero), _CMP_LE_OQ);

  const __m256d k = _mm256_round_pd(
      _mm256_mul_pd(x, _mm256_set1_pd(detail::kInvLn2)),
      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  const __m256d hi =
      _mm256_sub_pd(x, _mm256_mul_pd(k, _mm256_set1_pd(detail::kLn2Hi)));
  const __m256d lo = _mm256_mul_pd(k, _mm256_set1_pd(detail::kLn2Lo));
  const __m256d r = _mm256_sub_pd(hi, lo);
  const __m256d t = _mm256_mul_pd(r, r);
  const __m256d poly = _mm256_add_pd(
      _mm256_set1_pd(detail::kExpP1),
      _mm256_mul_pd(
          t, _mm256_add_pd(
                 _mm256_set1_pd(detail::kExpP2),
                 _mm256_mul_pd(
                     t, _mm256_add_pd(
                            _mm256_set1_pd(detail::kExpP3),
                            _mm256_mul_pd(
                                t, _mm256_add_pd(
                                       _mm256_set1_pd(detail::kExpP4),
                                       _mm256_mul_pd(t, _mm256_set1_pd(
                                                            detail::kExpP5)))))))));
  const __m256d c = _mm256_sub_pd(r, _mm256_mul_pd(t, poly));
  const __m256d q = _mm256_div_pd(_mm256_mul_pd(r, c),
                                  _mm256_sub_pd(_mm256_set1_pd(2.0), c));
  const __m256d er = _mm256_sub_pd(
      _mm256_set1_pd(1.0), _mm256_sub_pd(_mm256_sub_pd(lo, q), hi));

  const __m256i ki = pd_to_int64(k);
  __m256d res = _mm256_castsi256_pd(_mm256_add_epi64(
      _mm256_castpd_si256(er), _mm256_slli_epi64(ki, 52)));
  res = _mm256_blendv_pd(
      res, _mm256_set1_pd(std::numeric_limits<double>::infinity()), sat_mask);
  res = _mm256_blendv_pd(res, _mm256_setzero_pd(), zero_mask);
  return res;
}

}  // namespace

double sum(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t vn = n & ~std::size_t{3};
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < vn; i += 4)
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(x.data() + i));
  alignas(32) double a[4];
  _mm256_store_pd(a, acc);
  for (std::size_t i = vn; i < n; ++i) a[i & 3] += x[i];
  return (a[0] + a[1]) + (a[2] + a[3]);
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t vn = n & ~std::size_t{3};
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < vn; i += 4)
    acc = _mm256_add_pd(
        acc, _mm256_mul_pd(_mm256_loadu_pd(a.data() + i),
                           _mm256_loadu_pd(b.data() + i)));
  alignas(32) double acc4[4];
  _mm256_store_pd(acc4, acc);
  for (std::size_t i = vn; i < n; ++i) acc4[i & 3] += a[i] * b[i];
  return (acc4[0] + acc4[1]) + (acc4[2] + acc4[3]);
}

double max_abs(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t vn = n & ~std::size_t{3};
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < vn; i += 4)
    acc = _mm256_max_pd(
        acc, _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(x.data() + i)));
  alignas(32) double a[4];
  _mm256_store_pd(a, acc);
  for (std::size_t i = vn; i < n; ++i) {
    const double v = std::fabs(x[i]);
    if (v > a[i & 3]) a[i & 3] = v;
  }
  double m = a[0];
  for (int l = 1; l < 4; ++l)
    if (a[l] > m) m = a[l];
  return m;
}

void neg_log(std::span<const double> x, std::span<double> out) {
  const std::size_t n = x.size();
  const std::size_t vn = n & ~std::size_t{3};
  const __m256d neg = _mm256_set1_pd(-0.0);
  for (std::size_t i = 0; i < vn; i += 4)
    _mm256_storeu_pd(out.data() + i,
                     _mm256_xor_pd(log_pd(_mm256_loadu_pd(x.data() + i)), neg));
  for (std::size_t i = vn; i < n; ++i) out[i] = -portable_log(x[i]);
}

void pow_neg(std::span<const double> x, double exponent,
             std::span<double> out) {
  const std::size_t n = x.size();
  const std::size_t vn = n & ~std::size_t{3};
  const __m256d nc = _mm256_set1_pd(-exponent);
  for (std::size_t i = 0; i < vn; i += 4) {
    const __m256d lg = log_pd(_mm256_loadu_pd(x.data() + i));
    _mm256_storeu_pd(out.data() + i, exp_pd(_mm256_mul_pd(nc, lg)));
  }
  for (std::size_t i = vn; i < n; ++i)
    out[i] = portable_pow_neg(x[i], exponent);
}

void fill_uniform(rng::Rng4& g, std::span<double> out) {
  RngState st(g);
  const std::size_t n = out.size();
  const std::size_t vn = n & ~std::size_t{3};
  for (std::size_t i = 0; i < vn; i += 4)
    _mm256_storeu_pd(out.data() + i, u64_to_unit_open(st.next()));
  if (vn < n) {
    alignas(32) double tmp[4];
    _mm256_store_pd(tmp, u64_to_unit_open(st.next()));
    for (std::size_t i = vn; i < n; ++i) out[i] = tmp[i - vn];
  }
  st.store(g);
}

void fill_exponential(rng::Rng4& g, std::span<double> out) {
  RngState st(g);
  const std::size_t n = out.size();
  const std::size_t vn = n & ~std::size_t{3};
  const __m256d neg = _mm256_set1_pd(-0.0);
  for (std::size_t i = 0; i < vn; i += 4)
    _mm256_storeu_pd(out.data() + i,
                     _mm256_xor_pd(log_pd(u64_to_unit_open(st.next())), neg));
  if (vn < n) {
    alignas(32) double tmp[4];
    _mm256_store_pd(tmp, _mm256_xor_pd(log_pd(u64_to_unit_open(st.next())), neg));
    for (std::size_t i = vn; i < n; ++i) out[i] = tmp[i - vn];
  }
  st.store(g);
}

double select_weighted_sum(std::span<const double> z,
                           std::span<const double> u, double threshold,
                           double hi, double lo) {
  const std::size_t n = z.size();
  const std::size_t vn = n & ~std::size_t{3};
  const __m256d thr = _mm256_set1_pd(threshold);
  const __m256d hi_v = _mm256_set1_pd(hi);
  const __m256d lo_v = _mm256_set1_pd(lo);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < vn; i += 4) {
    const __m256d mask =
        _mm256_cmp_pd(_mm256_loadu_pd(u.data() + i), thr, _CMP_LT_OQ);
    const __m256d w = _mm256_blendv_pd(lo_v, hi_v, mask);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(z.data() + i), w));
  }
  alignas(32) double a[4];
  _mm256_store_pd(a, acc);
  for (std::size_t i = vn; i < n; ++i) {
    const double w = (u[i] < threshold) ? hi : lo;
    a[i & 3] += z[i] * w;
  }
  return (a[0] + a[1]) + (a[2] + a[3]);
}

}  // namespace stablebox::kernels::avx2_impl

#endif  // STABLEBOX_HAVE_AVX2_BACKEND
