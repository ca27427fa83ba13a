#include "stablebox/lepage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stablebox/kernels.hpp"

namespace stablebox::lepage {

namespace {

// Adaptive Simpson on [a,b] for a smooth positive integrand given in log
// space; eps is a relative target against the running whole-interval value.
struct LogIntegrand {
  double power;     // exponent of x
  double log_gamma; // lgamma(k), subtracted for scale
  double operator()(double x) const {
    return std::exp(power * std::log(x) - x - log_gamma);
  }
};

double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const LogIntegrand& f, double a, double fa, double b,
                     double fb, double m, double fm, double whole, double eps,
                     int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  if (depth > 48 || std::fabs(left + right - whole) <= 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, eps / 2.0, depth + 1) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, eps / 2.0, depth + 1);
}

double integrate(const LogIntegrand& f, double a, double b, double rel) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = simpson(a, fa, b, fb, fm);
  const double scale = std::max(std::fabs(whole), 1e-300);
  return adaptive_step(f, a, fa, b, fb, m, fm, whole, rel * scale, 0);
}

}  // namespace

std::vector<double> exp_partial_sums(std::size_t k, rng::RngStream& stream) {
  if (k < 1) throw std::invalid_argument("exp_partial_sums: k < 1");
  std::vector<double> s(k);
  double acc = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    acc += stream.exponential();
    s[j] = acc;
  }
  return s;
}

LePageEnvironment sample_environment(std::size_t k, rng::RngStream& stream) {
  LePageEnvironment env;
  env.s = exp_partial_sums(k, stream);
  env.s_star = exp_partial_sums(k, stream);
  return env;
}

std::vector<double> lepage_terms(std::span<const double> s, double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw std::invalid_argument("lepage_terms: alpha must be in (0,2)");
  std::vector<double> out(s.size());
  kernels::pow_neg(s, 1.0 / alpha, out);
  return out;
}

double centering_constant(std::size_t k, double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0))
    throw std::invalid_argument(
        "centering_constant: alpha must be in (1,2)");
  if (k < 1) throw std::invalid_argument("centering_constant: k < 1");
  const double a = static_cast<double>(k) - 1.0 - 1.0 / alpha;
  const LogIntegrand f{a, std::lgamma(static_cast<double>(k))};

  // The integrand peaks at x = a; past the peak it decays like e^-x.
  const double peak = std::max(1.0, a);
  const double upper = peak + 60.0 * std::sqrt(peak) + 60.0;
  return integrate(f, 1.0, upper, 1e-10);
}

double centering_sum(std::size_t k, double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0))
    throw std::invalid_argument("centering_sum: alpha must be in (1,2)");
  double total = 0.0;
  const std::size_t cutoff = std::min<std::size_t>(k, 64);
  for (std::size_t j = 1; j <= cutoff; ++j)
    total += centering_constant(j, alpha);
  for (std::size_t j = cutoff + 1; j <= k; ++j) {
    const double dj = static_cast<double>(j);
    total += std::exp(std::lgamma(dj - 1.0 / alpha) - std::lgamma(dj));
  }
  return total;
}

EtaSampler::EtaSampler(const stable::TailParams& tp, std::size_t k)
    : tp_(tp), k_(k), w1_(tp.w1()), w2_(tp.w2()), compensator_(0.0) {
  if (k < 1) throw std::invalid_argument("EtaSampler: k < 1");
  if (tp.alpha > 1.0)
    compensator_ = (w2_ - w1_) * centering_sum(k, tp.alpha);
}

EtaDraw EtaSampler::draw(rng::RngStream& stream, Workspace& ws) const {
  rng::Rng4 g(stream.next_u64(), stream.next_u64());
  ws.a.resize(k_);
  ws.b.resize(k_);
  const double inv_alpha = 1.0 / tp_.alpha;

  auto half_sum = [&](double& first_term) {
    kernels::fill_exponential(g, ws.a);
    double acc = 0.0;
    for (std::size_t j = 0; j < k_; ++j) {
      acc += ws.a[j];
      ws.a[j] = acc;
    }
    kernels::pow_neg(ws.a, inv_alpha, ws.b);
    first_term = ws.b[0];
    return kernels::sum(ws.b);
  };

  double z1 = 0.0, z1_star = 0.0;
  const double neg_sum = half_sum(z1);        // S half, weight w1
  const double pos_sum = half_sum(z1_star);   // S* half, weight w2
  EtaDraw d;
  d.eta = w2_ * pos_sum - w1_ * neg_sum - compensator_;
  d.z = std::max(w1_ * z1, w2_ * z1_star);
  return d;
}

EtaDraw sample_eta_with_max(const stable::TailParams& tp, std::size_t k,
                            rng::RngStream& stream) {
  EtaSampler sampler(tp, k);
  Workspace ws;
  return sampler.draw(stream, ws);
}

BridgeSampler::BridgeSampler(const stable::TailParams& tp,
                             std::vector<double> grid, std::size_t k)
    : eta_(tp, k), grid_(std::move(grid)) {
  if (grid_.size() < 2 || grid_.front() != 0.0 || grid_.back() != 1.0)
    throw std::invalid_argument("bridge grid must run from 0 to 1");
  for (std::size_t i = 0; i + 1 < grid_.size(); ++i)
    if (!(grid_[i] < grid_[i + 1]))
      throw std::invalid_argument("bridge grid must be strictly increasing");
  interval_scale_.resize(grid_.size() - 1);
  for (std::size_t i = 0; i + 1 < grid_.size(); ++i)
    interval_scale_[i] =
        std::pow(grid_[i + 1] - grid_[i], 1.0 / tp.alpha);
}

StableBridgePath BridgeSampler::draw(rng::RngStream& stream,
                                     Workspace& ws) const {
  StableBridgePath path;
  path.grid = grid_;
  path.w_values.assign(grid_.size(), 0.0);
  path.z = 0.0;
  for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
    const EtaDraw d = eta_.draw(stream, ws);
    path.w_values[i + 1] = path.w_values[i] + interval_scale_[i] * d.eta;
    path.z = std::max(path.z, interval_scale_[i] * d.z);
  }
  const double w1v = path.w_values.back();
  path.b_values.resize(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i)
    path.b_values[i] = path.w_values[i] - grid_[i] * w1v;
  return path;
}

StableBridgePath sample_stable_bridge(const stable::TailParams& tp,
                                      std::span<const double> grid,
                                      std::size_t k, rng::RngStream& stream) {
  BridgeSampler sampler(tp, std::vector<double>(grid.begin(), grid.end()), k);
  Workspace ws;
  return sampler.draw(stream, ws);
}

double truncation_diagnostic(const LePageEnvironment& env,
                             const stable::TailParams& tp, std::size_t k) {
  if (env.s.size() != env.s_star.size())
    throw std::invalid_argument("environment halves differ in length");
  if (env.s.size() < k)
    throw std::invalid_argument("environment shorter than k");
  const double two_over_alpha = 2.0 / tp.alpha;
  if (!(two_over_alpha > 1.0))
    throw std::invalid_argument("truncation diagnostic needs alpha < 2");

  auto side = [&](const std::vector<double>& s) {
    double partial = 0.0;
    for (std::size_t j = k; j < s.size(); ++j)
      partial += std::pow(s[j], -two_over_alpha);
    const double anchor = s.back();
    const double remainder = std::pow(anchor, 1.0 - two_over_alpha) *
                             tp.alpha / (2.0 - tp.alpha);
    return partial + remainder;
  };

  const double w1 = tp.w1(), w2 = tp.w2();
  return w1 * w1 * side(env.s) + w2 * w2 * side(env.s_star);
}

}  // namespace stablebox::lepage
