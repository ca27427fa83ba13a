#include "stablebox/cusum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stablebox/kernels.hpp"

namespace stablebox::cusum {

namespace {

void check_perm(std::span<const std::uint32_t> perm, std::size_t n) {
  if (perm.size() != n)
    throw std::invalid_argument("permutation length mismatch");
  std::vector<bool> seen(n, false);
  for (auto v : perm) {
    if (v >= n || seen[v])
      throw std::invalid_argument("not a permutation of 0..n-1");
    seen[v] = true;
  }
}

// Shared path builder. Partial sums of centered entries are evaluated as
// C_m - (m/n) * C_n so both endpoints are exactly zero; C_n is the full
// centered sum (a rounding residue in floating point) and the linear
// correction removes the drift it would otherwise leak into the path.
CusumPath build_path(const std::vector<double>& data, double mean,
                     double denom, const std::uint32_t* perm, const Grid& grid,
                     Norming norming) {
  const std::size_t n = data.size();
  std::vector<double> prefix(n + 1, 0.0);
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double v = perm ? data[perm[j]] : data[j];
    acc += v - mean;
    prefix[j + 1] = acc;
  }
  const double full = prefix[n];

  CusumPath path{grid, std::vector<double>(grid.size()), norming};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::size_t m = floor_nt(grid[i], n);
    const double frac = static_cast<double>(m) / static_cast<double>(n);
    path.values[i] = (prefix[m] - frac * full) / denom;
  }
  return path;
}

}  // namespace

Realization::Realization(std::vector<double> data) : x(std::move(data)) {
  if (x.size() < 2)
    throw std::invalid_argument("realization needs at least two entries");
  for (double v : x)
    if (!std::isfinite(v))
      throw std::invalid_argument("realization entries must be finite");
}

std::size_t floor_nt(RationalT t, std::size_t n) {
  if (t.den <= 0 || t.num < 0 || t.num > t.den)
    throw std::invalid_argument("time point must satisfy 0 <= num/den <= 1");
  const auto prod = static_cast<__int128>(n) * t.num;
  return static_cast<std::size_t>(prod / t.den);
}

Grid full_grid(std::size_t n) {
  Grid g;
  g.reserve(n + 1);
  for (std::size_t j = 0; j <= n; ++j)
    g.push_back({static_cast<std::int64_t>(j), static_cast<std::int64_t>(n)});
  return g;
}

Realization tie_break(const Realization& r, double alpha) {
  std::vector<double> sorted = r.x;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end())
    return r;

  const double n = static_cast<double>(r.n());
  const double step = 1.0 / std::pow(n, 2.0 + 1.0 / alpha);
  std::vector<double> out = r.x;
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] += static_cast<double>(j + 1) * step;

  sorted = out;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::runtime_error(
        "tie_break: perturbation vanished in rounding; data magnitude too "
        "large for the 1/n^(2+1/alpha) step");
  return Realization(std::move(out));
}

double t_n(const Realization& r) {
  const double m = kernels::max_abs(r.x);
  if (m == 0.0) throw std::invalid_argument("t_n: all entries are zero");
  return m;
}

double t_n_nu(const Realization& r, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("t_n_nu: nu must be positive");
  const double mean =
      kernels::sum(r.x) / static_cast<double>(r.n());
  double s = 0.0;
  bool degenerate = true;
  for (double v : r.x) {
    const double d = std::fabs(v - mean);
    if (d != 0.0) degenerate = false;
    s += std::pow(d, nu);
  }
  if (degenerate)
    throw std::invalid_argument("t_n_nu: degenerate (constant) data");
  return std::pow(s, 1.0 / nu);
}

double default_nu(double alpha) { return std::min(alpha + 1.0, 2.0 * alpha); }

CusumPath cusum_zn(const Realization& r, const Grid& grid) {
  const std::size_t n = r.n();
  const double mean = kernels::sum(r.x) / static_cast<double>(n);
  std::vector<double> centered(n);
  for (std::size_t j = 0; j < n; ++j) centered[j] = r.x[j] - mean;
  const double ss = kernels::dot(centered, centered);
  if (ss == 0.0)
    throw std::invalid_argument("cusum_zn: zero-variance (constant) data");
  const double s_n = std::sqrt(ss / static_cast<double>(n - 1));
  return build_path(r.x, mean, s_n * std::sqrt(static_cast<double>(n)),
                    nullptr, grid, Norming::z_score);
}

CusumPath cusum_zn_permuted(const Realization& r,
                            std::span<const std::uint32_t> perm,
                            const Grid& grid) {
  check_perm(perm, r.n());
  const std::size_t n = r.n();
  const double mean = kernels::sum(r.x) / static_cast<double>(n);
  std::vector<double> centered(n);
  for (std::size_t j = 0; j < n; ++j) centered[j] = r.x[j] - mean;
  const double ss = kernels::dot(centered, centered);
  if (ss == 0.0)
    throw std::invalid_argument("cusum_zn: zero-variance (constant) data");
  const double s_n = std::sqrt(ss / static_cast<double>(n - 1));
  return build_path(r.x, mean, s_n * std::sqrt(static_cast<double>(n)),
                    perm.data(), grid, Norming::z_score);
}

CusumPath cusum_an(const Realization& r, const Grid& grid) {
  const double mean = kernels::sum(r.x) / static_cast<double>(r.n());
  return build_path(r.x, mean, t_n(r), nullptr, grid, Norming::t_max);
}

CusumPath cusum_an_permuted(const Realization& r,
                            std::span<const std::uint32_t> perm,
                            const Grid& grid) {
  check_perm(perm, r.n());
  const double mean = kernels::sum(r.x) / static_cast<double>(r.n());
  return build_path(r.x, mean, t_n(r), perm.data(), grid, Norming::t_max);
}

CusumPath cusum_an_nu(const Realization& r, double nu, const Grid& grid) {
  const double mean = kernels::sum(r.x) / static_cast<double>(r.n());
  return build_path(r.x, mean, t_n_nu(r, nu), nullptr, grid, Norming::t_nu);
}

CusumPath cusum_an_nu_permuted(const Realization& r, double nu,
                               std::span<const std::uint32_t> perm,
                               const Grid& grid) {
  check_perm(perm, r.n());
  const double mean = kernels::sum(r.x) / static_cast<double>(r.n());
  return build_path(r.x, mean, t_n_nu(r, nu), perm.data(), grid,
                    Norming::t_nu);
}

double sup_functional(const CusumPath& path) {
  if (path.values.empty())
    throw std::invalid_argument("sup_functional: empty path");
  return kernels::max_abs(path.values);
}

}  // namespace stablebox::cusum
