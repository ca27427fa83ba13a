#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "stablebox/cusum.hpp"
#include "stablebox/permutation.hpp"
#include "stablebox/rng.hpp"
#include "stablebox/stable.hpp"

using namespace stablebox;
using cusum::Grid;
using cusum::RationalT;
using cusum::Realization;

TEST_CASE("floor_nt exact integer arithmetic") {
  CHECK(cusum::floor_nt({1, 3}, 3) == 1);
  CHECK(cusum::floor_nt({2, 3}, 3) == 2);
  CHECK(cusum::floor_nt({1, 2}, 5) == 2);
  CHECK(cusum::floor_nt({0, 1}, 10) == 0);
  CHECK(cusum::floor_nt({1, 1}, 10) == 10);
  CHECK(cusum::floor_nt({1, 3}, 1000000) == 333333);
}

TEST_CASE("tie_break formula and idempotence") {
  const Realization r({1.0, 1.0, 2.0});
  const auto out = cusum::tie_break(r, 1.0);
  CHECK(out.x[0] == doctest::Approx(1.0 + 1.0 / 27.0).epsilon(1e-15));
  CHECK(out.x[1] == doctest::Approx(1.0 + 2.0 / 27.0).epsilon(1e-15));
  CHECK(out.x[2] == doctest::Approx(2.0 + 3.0 / 27.0).epsilon(1e-15));

  const Realization distinct({3.0, 1.0, 2.0});
  const auto unchanged = cusum::tie_break(distinct, 1.0);
  CHECK(unchanged.x == distinct.x);

  const auto twice = cusum::tie_break(out, 1.0);
  CHECK(twice.x == out.x);

  const Realization all_equal({5.0, 5.0, 5.0, 5.0});
  const auto fixed = cusum::tie_break(all_equal, 0.5);
  for (std::size_t i = 0; i + 1 < fixed.x.size(); ++i)
    CHECK(fixed.x[i] < fixed.x[i + 1]);
}

TEST_CASE("t_n") {
  CHECK(cusum::t_n(Realization({3.0, -5.0, 2.0})) == 5.0);
  CHECK(cusum::t_n(Realization({-1.0, 0.0})) == 1.0);
  CHECK_THROWS_AS(cusum::t_n(Realization({0.0, 0.0})), std::invalid_argument);
  // homogeneity
  const Realization r({0.25, -1.5, 0.75});
  CHECK(cusum::t_n(Realization({0.5, -3.0, 1.5})) == 2.0 * cusum::t_n(r));
}

TEST_CASE("t_n_nu") {
  CHECK(cusum::t_n_nu(Realization({0.0, 2.0}), 2.0) ==
        doctest::Approx(std::sqrt(2.0)));
  CHECK(cusum::t_n_nu(Realization({0.0, 2.0}), 1.0) == doctest::Approx(2.0));
  // translation invariance
  const Realization a({1.0, 4.0, -2.0});
  const Realization b({1.0 + 7.0, 4.0 + 7.0, -2.0 + 7.0});
  CHECK(cusum::t_n_nu(a, 1.7) == doctest::Approx(cusum::t_n_nu(b, 1.7)));
  CHECK_THROWS_AS(cusum::t_n_nu(Realization({3.0, 3.0}), 2.0),
                  std::invalid_argument);
}

TEST_CASE("default_nu stays above alpha") {
  for (double a : {0.3, 0.5, 1.0, 1.2, 1.9}) {
    CHECK(cusum::default_nu(a) > a);
    CHECK(cusum::default_nu(a) <= 2.0 * a);
  }
  CHECK(cusum::default_nu(1.2) == doctest::Approx(2.2));
  CHECK(cusum::default_nu(0.5) == doctest::Approx(1.0));
}

TEST_CASE("cusum_zn hand value and endpoints") {
  const Realization r({1.0, 2.0, 3.0});
  const auto path = cusum::cusum_zn(r, cusum::full_grid(3));
  CHECK(path.values[0] == 0.0);
  CHECK(path.values[1] ==
        doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(path.values[3] == 0.0);  // exact telescoping
  CHECK_THROWS_AS(cusum::cusum_zn(Realization({2.0, 2.0}), cusum::full_grid(2)),
                  std::invalid_argument);
  // t below 1/n gives the empty sum
  const auto tiny = cusum::cusum_zn(r, Grid{RationalT{1, 100}});
  CHECK(tiny.values[0] == 0.0);
}

TEST_CASE("cusum_an hand values") {
  const Realization r({3.0, -1.0, 2.0});
  const auto path = cusum::cusum_an(r, cusum::full_grid(3));
  CHECK(path.values[1] == doctest::Approx(5.0 / 9.0).epsilon(1e-14));
  CHECK(path.values[2] == doctest::Approx(-2.0 / 9.0).epsilon(1e-14));
  CHECK(path.values[3] == 0.0);
}

TEST_CASE("cusum_an_permuted hand value, identity perm, endpoint") {
  const Realization r({3.0, -1.0, 2.0});
  const std::vector<std::uint32_t> perm{1, 2, 0};  // paper's (2,3,1)
  const auto path = cusum::cusum_an_permuted(r, perm, cusum::full_grid(3));
  CHECK(path.values[1] == doctest::Approx(-7.0 / 9.0).epsilon(1e-14));
  CHECK(path.values[3] == 0.0);

  const std::vector<std::uint32_t> id{0, 1, 2};
  const auto p1 = cusum::cusum_an_permuted(r, id, cusum::full_grid(3));
  const auto p2 = cusum::cusum_an(r, cusum::full_grid(3));
  CHECK(p1.values == p2.values);

  CHECK_THROWS_AS(
      cusum::cusum_an_permuted(r, std::vector<std::uint32_t>{0, 0, 1},
                               cusum::full_grid(3)),
      std::invalid_argument);
}

TEST_CASE("nu variant is proportional to zn at nu=2") {
  rng::RngStream s(31, 0);
  std::vector<double> data(40);
  for (auto& v : data) v = s.normal();
  const Realization r(data);
  const auto grid = cusum::full_grid(40);
  const auto zn = cusum::cusum_zn(r, grid);
  const auto a2 = cusum::cusum_an_nu(r, 2.0, grid);
  const double factor = std::sqrt(40.0 / 39.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(a2.values[i] == doctest::Approx(zn.values[i] * factor).epsilon(1e-12));
  CHECK(a2.values.back() == 0.0);

  const auto idperm = [&] {
    std::vector<std::uint32_t> p(40);
    for (std::uint32_t i = 0; i < 40; ++i) p[i] = i;
    return p;
  }();
  const auto a2p = cusum::cusum_an_nu_permuted(r, 2.0, idperm, grid);
  CHECK(a2p.values == a2.values);
}

TEST_CASE("scale equivariance of cusum_an") {
  rng::RngStream s(32, 0);
  std::vector<double> data(25);
  for (auto& v : data) v = s.normal() * 3.0;
  const Realization r(data);
  const auto grid = cusum::full_grid(25);
  const auto base = cusum::cusum_an(r, grid);

  // powers of two scale exactly
  for (double c : {4.0, 0.25, -2.0}) {
    std::vector<double> scaled(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) scaled[i] = c * data[i];
    const auto path = cusum::cusum_an(Realization(scaled), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (c > 0)
        CHECK(path.values[i] == base.values[i]);
      else
        CHECK(path.values[i] == -base.values[i]);
    }
  }
  // general scale within rounding
  std::vector<double> scaled(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) scaled[i] = 1.7 * data[i];
  const auto path = cusum::cusum_an(Realization(scaled), grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(path.values[i] == doctest::Approx(base.values[i]).epsilon(1e-13));
}

TEST_CASE("grid consistency: subsampling the full grid") {
  rng::RngStream s(33, 0);
  std::vector<double> data(60);
  for (auto& v : data) v = s.normal();
  const Realization r(data);
  const auto full = cusum::cusum_an(r, cusum::full_grid(60));
  const Grid sub{RationalT{10, 60}, RationalT{30, 60}, RationalT{45, 60}};
  const auto coarse = cusum::cusum_an(r, sub);
  CHECK(coarse.values[0] == full.values[10]);
  CHECK(coarse.values[1] == full.values[30]);
  CHECK(coarse.values[2] == full.values[45]);
}

TEST_CASE("norming invariance under permutation") {
  rng::RngStream s(34, 0);
  std::vector<double> data(30);
  for (auto& v : data) v = s.normal();
  const Realization r(data);
  const auto perm = permutation::random_permutation(30, s);
  std::vector<double> shuffled(30);
  for (std::size_t i = 0; i < 30; ++i) shuffled[i] = data[perm[i]];
  const Realization rp(shuffled);
  CHECK(cusum::t_n(rp) == cusum::t_n(r));
  CHECK(cusum::t_n_nu(rp, 1.3) ==
        doctest::Approx(cusum::t_n_nu(r, 1.3)).epsilon(1e-13));
}

TEST_CASE("sup_functional") {
  cusum::CusumPath path{Grid{{0, 1}, {1, 2}, {3, 4}, {1, 1}},
                        {0.0, 0.5, -0.7, 0.0},
                        cusum::Norming::t_max};
  CHECK(cusum::sup_functional(path) == 0.7);
  for (auto& v : path.values) v = -v;
  CHECK(cusum::sup_functional(path) == 0.7);
  path.values = {0.0, 0.0};
  CHECK(cusum::sup_functional(path) == 0.0);
  path.values.clear();
  CHECK_THROWS_AS(cusum::sup_functional(path), std::invalid_argument);
}
