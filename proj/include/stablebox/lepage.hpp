#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stablebox/rng.hpp"
#include "stablebox/stable.hpp"

namespace stablebox::lepage {

/// Frozen pair of exponential partial-sum sequences (S_j), (S_j*); the
/// conditioning object for every "given the environment" statement.
struct LePageEnvironment {
  std::vector<double> s;
  std::vector<double> s_star;
};

/// S_j = E_1 + ... + E_j with i.i.d. unit-mean exponentials; strictly
/// increasing, S_1 > 0.
std::vector<double> exp_partial_sums(std::size_t k, rng::RngStream& stream);

/// Draws both halves (s first, then s_star) of an environment of length k.
LePageEnvironment sample_environment(std::size_t k, rng::RngStream& stream);

/// Z_j = S_j^(-1/alpha); strictly decreasing for increasing input.
std::vector<double> lepage_terms(std::span<const double> s, double alpha);

/// c_k = E[Z_k 1{Z_k <= 1}] = Gamma(k)^-1 int_1^inf x^(k-1-1/alpha) e^-x dx,
/// for alpha in (1,2) where the series needs centering. Adaptive quadrature
/// of the incomplete-gamma integral to relative accuracy 1e-10.
double centering_constant(std::size_t k, double alpha);

/// sum_{j<=k} c_j. The indicator inside c_j only matters for small j; past
/// j = 64 it is 1 up to less than a part in 1e18 and the term equals the
/// gamma ratio Gamma(j-1/alpha)/Gamma(j), which is used directly there.
double centering_sum(std::size_t k, double alpha);

struct EtaDraw {
  double eta;  // truncated two-sided LePage sum, centered when alpha > 1
  double z;    // M = max(w1 S_1^(-1/a), w2 S_1*^(-1/a)), coupled to eta
};

/// Scratch buffers for the samplers; one per thread.
struct Workspace {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> u1;
  std::vector<double> u2;
};

/// Draws (eta, z) pairs: fresh independent halves S, S* per draw,
///   eta = w2 sum_j (S_j*)^(-1/a) - w1 sum_j S_j^(-1/a)  (j <= k),
/// minus (w2 - w1) * centering_sum(k, alpha) when alpha in (1,2), so each
/// weighted half carries the per-term compensator c_j of the one-sided
/// series. z is the coupled maximum term.
class EtaSampler {
 public:
  EtaSampler(const stable::TailParams& tp, std::size_t k);

  EtaDraw draw(rng::RngStream& stream, Workspace& ws) const;
  std::size_t k() const { return k_; }
  double compensator() const { return compensator_; }

 private:
  stable::TailParams tp_;
  std::size_t k_;
  double w1_, w2_;
  double compensator_;
};

/// Single-draw convenience wrapper; recomputes the compensator each call,
/// use EtaSampler for bulk work.
EtaDraw sample_eta_with_max(const stable::TailParams& tp, std::size_t k,
                            rng::RngStream& stream);

/// One draw of the limit pair (W_alpha, B_alpha, Z) on a grid: independent
/// (eta_i, Z_i) per grid interval, W increments (dt_i)^(1/a) eta_i,
/// z = max_i (dt_i)^(1/a) Z_i, b = w - t w(1).
struct StableBridgePath {
  std::vector<double> grid;  // 0 = t_0 < ... < t_m = 1
  std::vector<double> w_values;
  std::vector<double> b_values;
  double z;
};

class BridgeSampler {
 public:
  BridgeSampler(const stable::TailParams& tp, std::vector<double> grid,
                std::size_t k);
  StableBridgePath draw(rng::RngStream& stream, Workspace& ws) const;

 private:
  EtaSampler eta_;
  std::vector<double> grid_;
  std::vector<double> interval_scale_;  // (dt_i)^(1/alpha)
};

StableBridgePath sample_stable_bridge(const stable::TailParams& tp,
                                      std::span<const double> grid,
                                      std::size_t k, rng::RngStream& stream);

/// Truncation certificate: the tail mass
///   w1^2 sum_{j>k} S_j^(-2/a) + w2^2 sum_{j>k} (S_j*)^(-2/a)
/// evaluated exactly up to the environment length plus an integral-
/// comparison estimate of the remainder (S_j ~ S_len + (j - len)):
///   int_0^inf (S_len + u)^(-2/a) du = S_len^(1-2/a) * a/(2-a).
/// Decreasing in k; throws if the environment is shorter than k.
double truncation_diagnostic(const LePageEnvironment& env,
                             const stable::TailParams& tp, std::size_t k);

}  // namespace stablebox::lepage
