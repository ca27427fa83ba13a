#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace stablebox::cusum {

/// One fixed data vector X_1..X_n, the conditioning object for every
/// "given the realization" statement. n >= 2 and all entries finite.
struct Realization {
  std::vector<double> x;

  explicit Realization(std::vector<double> data);
  std::size_t n() const { return x.size(); }
};

/// Time point t = num/den in [0,1] kept as a rational so floor(n*t) is
/// computed in integer arithmetic; t given as j/n never suffers a
/// floating-point floor hazard at the grid boundaries.
struct RationalT {
  std::int64_t num;
  std::int64_t den;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

using Grid = std::vector<RationalT>;

/// floor(n * t) exactly.
std::size_t floor_nt(RationalT t, std::size_t n);

/// The full grid {j/n : j = 0..n}.
Grid full_grid(std::size_t n);

enum class Norming { z_score, t_max, t_nu };

struct CusumPath {
  Grid grid;
  std::vector<double> values;
  Norming norming;
};

/// Tie breaking: when duplicates exist, entry with (1-based) index j gets
/// +j/n^(2+1/alpha); already-distinct input is returned unchanged.
Realization tie_break(const Realization& r, double alpha);

/// T_n = max_j |X_j|; throws on all-zero data.
double t_n(const Realization& r);

/// T_n^(nu) = (sum_j |X_j - mean|^nu)^(1/nu); throws on constant data.
double t_n_nu(const Realization& r, double nu);

/// Default nu for the nu-normalized variants: min(alpha + 1, 2*alpha),
/// which always satisfies nu > alpha.
double default_nu(double alpha);

/// Z_n: partial sums of mean-centered data over s_n*sqrt(n), with
/// s_n^2 = sum (X_j - mean)^2 / (n-1). Throws on zero-variance data.
CusumPath cusum_zn(const Realization& r, const Grid& grid);

/// Permuted Z_n (same s_n*sqrt(n) norming, summands reordered by perm).
CusumPath cusum_zn_permuted(const Realization& r,
                            std::span<const std::uint32_t> perm,
                            const Grid& grid);

/// A_n: partial sums of mean-centered data over T_n.
CusumPath cusum_an(const Realization& r, const Grid& grid);

/// Permuted A_n: summands taken in the order X_{perm(1)}, X_{perm(2)}, ...;
/// the norming T_n and the mean come from the unpermuted data (both are
/// permutation invariant). perm is 0-based and must be a bijection.
CusumPath cusum_an_permuted(const Realization& r,
                            std::span<const std::uint32_t> perm,
                            const Grid& grid);

/// nu-normalized variants (T_n replaced by T_n^(nu)).
CusumPath cusum_an_nu(const Realization& r, double nu, const Grid& grid);
CusumPath cusum_an_nu_permuted(const Realization& r, double nu,
                               std::span<const std::uint32_t> perm,
                               const Grid& grid);

/// max over the grid of |value|.
double sup_functional(const CusumPath& path);

}  // namespace stablebox::cusum
