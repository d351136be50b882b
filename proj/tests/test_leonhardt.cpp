// Copyright 2026 seqtomo authors
// SPDX-License-Identifier: Apache-2.0
//
// The discrete characteristic function and its exact algebraic bridge to
// the domain-restricted Moyal function.

#include <catch2/catch_amalgamated.hpp>

#include "seqtomo/leonhardt.hpp"
#include "seqtomo/rng.hpp"

using namespace seqtomo;

TEST_CASE("discrete characteristic basics", "[leonhardt]") {
  SECTION("nu = 0, n = 0 is the trace") {
    const int d = GENERATE(2, 3, 4, 5, 6, 7, 8, 9);
    HilbertSpec spec{d, 1.0};
    const DensityMatrix dm = random_density(spec, d, 300u + static_cast<unsigned>(d));
    REQUIRE(std::abs(leonhardt_char(dm, 0.0, 0.0) - Cx{1.0, 0.0}) < 1e-12);
  }

  SECTION("half-integer labels only") {
    HilbertSpec spec{3, 1.0};
    const DensityMatrix dm = maximally_mixed(spec);
    REQUIRE_THROWS_AS(leonhardt_char(dm, 0.3, 1.0), domain_error);
    REQUIRE_THROWS_AS(discrete_relation_check(dm, 0.71, 1), domain_error);
    REQUIRE_NOTHROW(leonhardt_char(dm, 0.5, 0.7));
    REQUIRE_NOTHROW(leonhardt_char(dm, -1.0, 2.3));
  }

  SECTION("two-level closed form at arbitrary real n") {
    // d = 2 (f = 1): W(0, n) = rho00 + e^{-2 pi i n} rho11 and
    // W(1/2, n) = e^{+i pi n} rho01 + e^{-i pi n} rho10.
    HilbertSpec spec{2, 1.0};
    const DensityMatrix dm = bloch_state(spec, 0.6, -0.3, std::sqrt(0.55));
    const double n = GENERATE(0.0, 0.37, -1.25, 2.0);
    const Cx want0 = dm.rho(0, 0) + std::exp(-2.0 * pi * iu * n) * dm.rho(1, 1);
    const Cx want1 = std::exp(iu * (pi * n)) * dm.rho(0, 1) +
                     std::exp(-iu * (pi * n)) * dm.rho(1, 0);
    REQUIRE(std::abs(leonhardt_char(dm, 0.0, n) - want0) < 1e-12);
    REQUIRE(std::abs(leonhardt_char(dm, 0.5, n) - want1) < 1e-12);
  }

  SECTION("label periodicity shifts a phase only") {
    const int d = GENERATE(2, 3, 4, 5);
    HilbertSpec spec{d, 1.0};
    const DensityMatrix dm = random_density(spec, d, 310u + static_cast<unsigned>(d));
    RngStream rng(17u, static_cast<uint64_t>(d));
    for (int mu = 0; mu < d; ++mu)
      for (int rep = 0; rep < 4; ++rep) {
        const double phi = 8.0 * (rng.uniform() - 0.5);
        const Cx lhs = leonhardt_char_phase(dm, mu + d, phi);
        const Cx rhs = std::exp(iu * (-phi * 0.5 * d)) *
                       leonhardt_char_phase(dm, mu, phi);
        REQUIRE(std::abs(lhs - rhs) < 1e-12);
      }
  }
}

TEST_CASE("bridge to the Moyal function", "[leonhardt]") {
  SECTION("coincidence on the populations") {
    const int d = GENERATE(2, 3, 4, 5, 6, 7, 8, 9);
    HilbertSpec spec{d, 1.0};
    const DensityMatrix dm = random_density(spec, d, 320u + static_cast<unsigned>(d));
    RngStream rng(18u, static_cast<uint64_t>(d));
    for (int rep = 0; rep < 10; ++rep)
      REQUIRE(relation_check(dm, 0, 8.0 * (rng.uniform() - 0.5)) < 1e-12);
  }

  SECTION("two-term relation for every coherence offset") {
    const int d = GENERATE(2, 3, 4, 5, 6, 7, 8, 9);
    HilbertSpec spec{d, 1.0};
    RngStream rng(19u, static_cast<uint64_t>(d));
    for (unsigned state = 0; state < 3; ++state) {
      const DensityMatrix dm =
          random_density(spec, 1 + static_cast<int>(state) % d,
                         330u + 10u * static_cast<unsigned>(d) + state);
      for (int mu = 1; mu < d; ++mu)
        for (int rep = 0; rep < 10; ++rep)
          REQUIRE(relation_check(dm, mu, 12.0 * (rng.uniform() - 0.5)) < 1e-12);
    }
  }

  SECTION("offsets outside the principal range are rejected") {
    HilbertSpec spec{4, 1.0};
    const DensityMatrix dm = maximally_mixed(spec);
    REQUIRE_THROWS_AS(relation_check(dm, -1, 0.0), domain_error);
    REQUIRE_THROWS_AS(relation_check(dm, 4, 0.0), domain_error);
  }

  SECTION("discrete phases collapse to a common prefactor") {
    const int d = GENERATE(2, 3, 4, 5, 6, 7, 8, 9);
    HilbertSpec spec{d, 1.0};
    const DensityMatrix dm = random_density(spec, d, 340u + static_cast<unsigned>(d));
    for (int two_nu = 0; two_nu < d; ++two_nu)
      for (long n = -3; n <= 3; ++n)
        REQUIRE(discrete_relation_check(dm, 0.5 * two_nu, n) < 1e-12);
  }

  SECTION("the bridge is independent of the physical length scale") {
    const int d = GENERATE(3, 4);
    for (double l0 : {1.0, 2.5}) {
      HilbertSpec spec{d, l0};
      const DensityMatrix dm = random_density(spec, d, 350u);
      for (int mu = 0; mu < d; ++mu)
        REQUIRE(relation_check(dm, mu, 1.37) < 1e-12);
    }
  }
}
