#include "whittlefit/grid.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace wf;

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

TEST_CASE("GridSpec validates and indexes colexicographically") {
  CHECK_THROWS_AS(GridSpec(std::vector<int>{}), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec({0, 4}), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec({4}, {-1.0}), std::invalid_argument);

  GridSpec g({3, 4});
  CHECK(g.total_points() == 12);
  const int site[2] = {2, 1};
  CHECK(g.index_of(site) == 2 + 3 * 1);  // first axis fastest
  int back[2];
  g.site_of(5, back);
  CHECK(back[0] == 2);
  CHECK(back[1] == 1);
}

TEST_CASE("Modulation rejects weights outside [0,1] and empty sets error") {
  GridSpec g({4});
  ArrayXd bad(4);
  bad << 0.5, 1.2, 0.0, 0.0;
  CHECK_THROWS_AS(Modulation(g, bad), std::invalid_argument);

  Modulation zero(g, ArrayXd::Zero(4));
  CHECK_THROWS_WITH_AS(mask_autocorrelation(zero),
                       "mask_autocorrelation: empty observation set",
                       std::invalid_argument);
}

TEST_CASE("mask autocorrelation: full grid closed form") {
  // full 4x4 grid at lag (1,0) gives (1 - 1/4)(1 - 0/4)
  Modulation mod = Modulation::ones(GridSpec({4, 4}));
  const LagField cg = mask_autocorrelation(mod);
  const int u10[2] = {1, 0};
  CHECK(cg.at(u10) == doctest::Approx(0.75).epsilon(1e-12));
  const int u33[2] = {3, 3};
  CHECK(full_grid_autocorrelation(mod.grid(), u33) == doctest::Approx(0.0625));
  const int u40[2] = {4, 0};
  CHECK(full_grid_autocorrelation(mod.grid(), u40) == 0.0);
  CHECK(cg.at(u40) == 0.0);
}

TEST_CASE("mask autocorrelation: zero lag is 1, gappy 1-D example") {
  GridSpec g({3});
  ArrayXd v(3);
  v << 1.0, 0.0, 1.0;
  Modulation mod(g, v);
  const LagField cg = mask_autocorrelation(mod);
  const int u0[1] = {0};
  const int u1[1] = {1};
  const int u2[1] = {2};
  CHECK(cg.at(u0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cg.at(u1) == 0.0);
  CHECK(cg.at(u2) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("mask autocorrelation matches brute force on random masks") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const int d = 1 + static_cast<int>(seed % 3);
    GridSpec grid = oracle::random_grid(d, 64, seed);
    Modulation mod = oracle::random_mask(grid, 0.6, seed);
    const LagField cg = mask_autocorrelation(mod);
    std::vector<int> lag(d);
    for (std::int64_t i = 0; i < cg.embed_size(); ++i) {
      cg.lag_of(i, lag);
      bool in_box = true;
      for (int a = 0; a < d; ++a)
        if (std::abs(lag[a]) > grid.dims()[a] - 1) in_box = false;
      if (!in_box) continue;
      const double expect = oracle::mask_autocorr(mod, lag);
      CHECK(cg.values()[i] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("mask autocorrelation properties: range, symmetry, mass bound") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    GridSpec grid = oracle::random_grid(2, 64, seed);
    Modulation mod = oracle::random_mask(grid, 0.5, seed);
    const LagField cg = mask_autocorrelation(mod);
    std::vector<int> lag(2), neg(2);
    double mass = 0.0;
    for (std::int64_t i = 0; i < cg.embed_size(); ++i) {
      const double c = cg.values()[i];
      CHECK(c >= 0.0);
      CHECK(c <= 1.0);
      cg.lag_of(i, lag);
      for (int a = 0; a < 2; ++a) neg[a] = -lag[a];
      CHECK(cg.at(neg) == doctest::Approx(c).epsilon(1e-12));
      mass += c;
    }
    CHECK(mass >= mod.sum_g() * (1.0 - 1e-12));  // Sum_u c_g(u) >= Sum_s g_s
  }
}

TEST_CASE("full grid autocorrelation equals the FFT path on a 16x16 grid") {
  GridSpec grid({16, 16});
  Modulation mod = Modulation::ones(grid);
  const LagField cg = mask_autocorrelation(mod);
  PhiloxStream rng(7, 1);
  for (int t = 0; t < 50; ++t) {
    int lag[2] = {static_cast<int>(rng.next_below(31)) - 15,
                  static_cast<int>(rng.next_below(31)) - 15};
    CHECK(cg.at(lag) ==
          doctest::Approx(full_grid_autocorrelation(grid, lag)).epsilon(1e-12));
  }
}

TEST_CASE("hanning modulation") {
  SUBCASE("1-D length 5 closed form") {
    Modulation mod = hanning_modulation(Modulation::ones(GridSpec({5})));
    CHECK(mod.values()[0] == doctest::Approx(0.0));
    CHECK(mod.values()[1] == doctest::Approx(0.5));
    CHECK(mod.values()[2] == doctest::Approx(1.0));
    CHECK(mod.values()[3] == doctest::Approx(0.5));
    CHECK(mod.values()[4] == doctest::Approx(0.0));
  }
  SUBCASE("zero modulation stays zero") {
    Modulation zero(GridSpec({5}), ArrayXd::Zero(5));
    CHECK(hanning_modulation(zero).values().abs().maxCoeff() == 0.0);
  }
  SUBCASE("4x4 value at (1,1) is 0.75^2") {
    Modulation mod = hanning_modulation(Modulation::ones(GridSpec({4, 4})));
    const int site[2] = {1, 1};
    CHECK(mod.values()[mod.grid().index_of(site)] ==
          doctest::Approx(0.5625).epsilon(1e-12));
  }
  SUBCASE("requires n_i >= 2") {
    CHECK_THROWS_AS(hanning_modulation(Modulation::ones(GridSpec({1, 4}))),
                    std::invalid_argument);
  }
  SUBCASE("max value stays <= 1") {
    Modulation mod = hanning_modulation(Modulation::ones(GridSpec({6, 7})));
    CHECK(mod.values().maxCoeff() <= 1.0);
  }
}

TEST_CASE("fejer kernel") {
  SUBCASE("omega = 0 collapses to (sum g)^2 / sum g^2") {
    GridSpec g({4});
    ArrayXd v(4);
    v << 1.0, 0.5, 0.0, 1.0;
    Modulation mod(g, v);
    const double w0[1] = {0.0};
    const double expect = std::pow(kTwoPi, -1) * 2.5 * 2.5 / 2.25;
    CHECK(fejer_kernel(mod, w0) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("full 1-D grid n=4 vanishes at pi") {
    Modulation mod = Modulation::ones(GridSpec({4}));
    const double wpi[1] = {3.14159265358979323846};
    CHECK(fejer_kernel(mod, wpi) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("integrates to 1 over the torus") {
    // trapezoid on the 2n-per-axis Fourier grid integrates this trigonometric
    // polynomial exactly
    GridSpec g({5, 3});
    Modulation mod = oracle::random_mask(g, 0.7, 42);
    const int m0 = 10, m1 = 6;
    double acc = 0.0;
    for (int k0 = 0; k0 < m0; ++k0)
      for (int k1 = 0; k1 < m1; ++k1) {
        const double w[2] = {kTwoPi * k0 / m0, kTwoPi * k1 / m1};
        acc += fejer_kernel(mod, w);
      }
    acc *= kTwoPi * kTwoPi / (m0 * m1);
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("DFT of c_g equals the kernel (Fourier pair)") {
    GridSpec g({6, 4});
    Modulation mod = oracle::random_mask(g, 0.6, 9);
    const LagField cg = mask_autocorrelation(mod);
    PhiloxStream rng(3, 3);
    std::vector<int> lag(2);
    for (int t = 0; t < 20; ++t) {
      const double w[2] = {kTwoPi * rng.next_double(), kTwoPi * rng.next_double()};
      std::complex<double> acc(0.0, 0.0);
      for (std::int64_t i = 0; i < cg.embed_size(); ++i) {
        if (cg.values()[i] == 0.0) continue;
        cg.lag_of(i, lag);
        const double phase = -(w[0] * lag[0] + w[1] * lag[1]);
        acc += cg.values()[i] * std::complex<double>(std::cos(phase), std::sin(phase));
      }
      const double dft = std::pow(kTwoPi, -2) * acc.real();
      const double direct = fejer_kernel(mod, w);
      CHECK(dft == doctest::Approx(direct).epsilon(1e-10));
      CHECK(dft >= -1e-10);
    }
  }
}
