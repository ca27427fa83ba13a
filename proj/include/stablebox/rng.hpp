#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace stablebox::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 step; used for key derivation and generator seeding.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += kGolden;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Collapses (seed, stream_id, lane) into a single well-mixed 64-bit key.
/// Distinct inputs give unrelated keys, which is what makes streams derived
/// from (master_seed, experiment, replicate) statistically independent.
inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream_id,
                                std::uint64_t lane = 0) {
  std::uint64_t s = seed;
  (void)splitmix64_next(s);
  s ^= (stream_id + 1) * 0xD1B54A32D192ED03ULL;
  (void)splitmix64_next(s);
  s ^= (lane + 1) * 0x8CB92BA72F3D8DD7ULL;
  return s;
}

/// xoshiro256++ (Blackman & Vigna). Chosen over <random> engines because the
/// standard library's *distributions* are implementation-defined, and the
/// reproducibility contract here is bit-level.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t key) {
    std::uint64_t s = key;
    for (auto& w : s_) w = splitmix64_next(s);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  const std::array<std::uint64_t, 4>& state() const { return s_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_{};
};

/// Maps the top 52 bits of a word to the open interval (0, 1).
/// (m + 0.5) * 2^-52 with m < 2^52 is exact in double arithmetic, so the
/// value is never 0 or 1 and the mapping is identical on every backend.
inline double u64_to_unit_open(std::uint64_t x) {
  return (static_cast<double>(x >> 12) + 0.5) * 0x1p-52;
}

/// One deterministic stream of scalar draws, identified by (seed, stream_id).
/// Same pair -> bit-identical sequence; distinct stream_ids are derived
/// through SplitMix64 so they behave as independent streams.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id), gen_(derive_key(seed, stream_id)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return gen_.next(); }

  /// Uniform on the open interval (0, 1).
  double uniform() { return u64_to_unit_open(gen_.next()); }

  /// Unit-mean exponential, strictly positive.
  double exponential() { return -std::log(uniform()); }

  /// Standard normal via Box-Muller; consumes two uniforms per pair.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, bound), exactly unbiased (Lemire with rejection).
  std::uint64_t below(std::uint64_t bound) {
    using u128 = unsigned __int128;
    std::uint64_t x = gen_.next();
    u128 m = static_cast<u128>(x) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (lo < threshold) {
        x = gen_.next();
        m = static_cast<u128>(x) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// New stream keyed off this one's identity plus a tag. Does not consume
  /// from this stream.
  RngStream substream(std::uint64_t tag) const {
    return RngStream(derive_key(seed_, stream_id_, tag), stream_id_ ^ kGolden);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  Xoshiro256pp gen_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

/// Four interleaved xoshiro256++ lanes backing the block kernels.
/// Lane l serves elements with index congruent to l mod 4, which is the
/// layout both the scalar reference kernels and the SIMD kernels use, so
/// the two backends consume and produce identical streams.
class Rng4 {
 public:
  Rng4(std::uint64_t seed, std::uint64_t stream_id) {
    for (int lane = 0; lane < 4; ++lane) {
      std::uint64_t s = derive_key(seed, stream_id, 0x5157u + lane);
      for (int w = 0; w < 4; ++w) state_[w][lane] = splitmix64_next(s);
    }
  }

  /// State layout: word-major, lane-minor (state_[word][lane]).
  alignas(32) std::array<std::array<std::uint64_t, 4>, 4> state_;

  bool operator==(const Rng4& other) const { return state_ == other.state_; }
};

}  // namespace stablebox::rng
