// Copyright 2026 seqtomo authors
// SPDX-License-Identifier: Apache-2.0
//
// Reconstruction pipeline: recovering the state from characteristic-function
// values, projection onto the density manifold, and the distance metrics.

#include <catch2/catch_amalgamated.hpp>

#include "seqtomo/reconstruct.hpp"
#include "seqtomo/rng.hpp"

using namespace seqtomo;

namespace {

// Criterion-style probe: equal pointer widths with unit cross chirp, which
// keeps every paired solve well conditioned.
Probe chirped_probe(const HilbertSpec& spec, double width_in_a0) {
  const double s = width_in_a0 * spec.a0();
  return gaussian_from_widths(s, s, 0.0, 1.0);
}

double max_abs_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("projection onto the density manifold", "[reconstruct]") {
  SECTION("frozen two-level case") {
    // diag(1.2, -0.2): the simplex shift is theta = -0.2, support size 1.
    HilbertSpec spec{2, 1.0};
    Eigen::MatrixXcd raw = Eigen::MatrixXcd::Zero(2, 2);
    raw(0, 0) = 1.2;
    raw(1, 1) = -0.2;
    const DensityMatrix p = project_to_density(spec, raw);
    REQUIRE(std::abs(p.rho(0, 0) - 1.0) < 1e-12);
    REQUIRE(std::abs(p.rho(1, 1)) < 1e-12);
    REQUIRE(std::abs(p.rho(0, 1)) < 1e-12);
  }

  SECTION("valid states are fixed points") {
    const int d = GENERATE(2, 3, 4, 5);
    const int rank = GENERATE(1, 2);
    HilbertSpec spec{d, 1.0};
    const DensityMatrix dm =
        random_density(spec, std::min(rank, d), 421u + static_cast<unsigned>(d));
    const DensityMatrix p = project_to_density(spec, dm.rho);
    REQUIRE(max_abs_diff(p.rho, dm.rho) < 1e-12);
  }

  SECTION("output is always a valid state") {
    const int d = GENERATE(2, 4, 6);
    HilbertSpec spec{d, 1.0};
    RngStream rng(99u, static_cast<uint64_t>(d));
    const DensityMatrix base = random_density(spec, d, 7u);
    Eigen::MatrixXcd noisy = base.rho;
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k)
        noisy(i, k) += 0.3 * Cx{rng.normal(), rng.normal()};
    const DensityMatrix p = project_to_density(spec, noisy);
    REQUIRE_NOTHROW(validate_density(p));
    REQUIRE(std::abs(p.rho.trace().real() - 1.0) < 1e-12);
  }

  SECTION("projection of a Hermitian matrix is the Frobenius-nearest state") {
    HilbertSpec spec{3, 1.0};
    RngStream rng(5u, 0u);
    Eigen::MatrixXcd raw = Eigen::MatrixXcd::Zero(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k <= i; ++k) {
        raw(i, k) = 0.5 * Cx{rng.normal(), i == k ? 0.0 : rng.normal()};
        raw(k, i) = std::conj(raw(i, k));
      }
    const DensityMatrix p = project_to_density(spec, raw);
    const double best = (raw - p.rho).norm();
    for (unsigned seed = 0; seed < 20; ++seed) {
      const DensityMatrix other = random_density(spec, 3, 1000u + seed);
      REQUIRE((raw - other.rho).norm() >= best - 1e-12);
    }
  }

  SECTION("shape mismatch is rejected") {
    HilbertSpec spec{3, 1.0};
    REQUIRE_THROWS_AS(project_to_density(spec, Eigen::MatrixXcd::Zero(2, 2)),
                      validation_error);
  }
}

TEST_CASE("fidelity and trace distance", "[reconstruct]") {
  HilbertSpec spec{2, 1.0};

  SECTION("two-level closed forms") {
    const DensityMatrix up = bloch_state(spec, 0.0, 0.0, 1.0);
    const DensityMatrix down = bloch_state(spec, 0.0, 0.0, -1.0);
    const DensityMatrix plus = bloch_state(spec, 1.0, 0.0, 0.0);
    REQUIRE(std::abs(fidelity(up, up) - 1.0) < 1e-12);
    REQUIRE(std::abs(fidelity(up, down)) < 1e-12);
    REQUIRE(std::abs(fidelity(up, plus) - 0.5) < 1e-12);
    REQUIRE(std::abs(trace_distance(up, down) - 1.0) < 1e-12);
    REQUIRE(std::abs(trace_distance(up, up)) < 1e-12);
    // Pure states: distance is half the Bloch-vector separation.
    REQUIRE(std::abs(trace_distance(up, plus) - 0.5 * std::sqrt(2.0)) < 1e-12);
  }

  SECTION("fidelity is symmetric and bounded") {
    const int d = GENERATE(2, 3, 5);
    HilbertSpec s{d, 1.0};
    const DensityMatrix a = random_density(s, d, 31u);
    const DensityMatrix b = random_density(s, std::max(1, d - 1), 32u);
    const double fab = fidelity(a, b);
    // Square roots of near-zero eigenvalues carry sqrt(eps)-level noise, so
    // the two evaluation orders agree only to ~1e-8 for rank-one arguments.
    REQUIRE(std::abs(fab - fidelity(b, a)) < 1e-7);
    REQUIRE(fab >= -1e-12);
    REQUIRE(fab <= 1.0 + 1e-12);
  }

  SECTION("distance and fidelity bracket each other") {
    // 1 - sqrt(F) <= T <= sqrt(1 - F) for every pair of states.
    const int d = GENERATE(2, 3, 4);
    const unsigned seed = GENERATE(1u, 2u, 3u);
    HilbertSpec s{d, 1.0};
    const DensityMatrix a = random_density(s, d, 100u + seed);
    const DensityMatrix b = random_density(s, 1, 200u + seed);
    const double f = fidelity(a, b);
    const double t = trace_distance(a, b);
    REQUIRE(t >= 1.0 - std::sqrt(f) - 1e-10);
    REQUIRE(t <= std::sqrt(1.0 - f) + 1e-10);
  }

  SECTION("mismatched spaces are rejected") {
    HilbertSpec other{3, 1.0};
    REQUIRE_THROWS_AS(
        fidelity(maximally_mixed(spec), maximally_mixed(other)),
        validation_error);
    REQUIRE_THROWS_AS(
        trace_distance(maximally_mixed(spec), maximally_mixed(other)),
        validation_error);
  }
}

TEST_CASE("exact pipeline returns the input state", "[reconstruct]") {
  const int d = GENERATE(2, 3, 4, 5, 6, 7);
  HilbertSpec spec{d, 1.0};
  const Probe probe = chirped_probe(spec, 1.0);

  SECTION("random mixed and pure states") {
    const int rank = GENERATE(1, 0);  // 0 marks full rank
    const DensityMatrix dm =
        random_density(spec, rank == 0 ? d : rank, 800u + static_cast<unsigned>(d));
    const ReconstructionResult r =
        reconstruct(spec, probe, char_source_exact(dm, probe));
    // The farthest coherence pair is the worst conditioned (3e7 at d = 7),
    // and its solve carries an eps-over-smallest-singular-value floor near
    // 1e-10; everything below d = 6 sits under 1e-12.
    REQUIRE(max_abs_diff(r.rho_raw, dm.rho) < 1e-9);
    REQUIRE(r.flagged_count == 0);
    REQUIRE(r.hermiticity_violation < 1e-12);
    REQUIRE(r.trace_deviation < 1e-11);
    REQUIRE(r.max_route_discrepancy < 2e-9);
    REQUIRE(fidelity(r.rho, dm) > 1.0 - 1e-9);
    REQUIRE(trace_distance(r.rho, dm) < 5e-9);
    // Every paired point carries both routes and a finished solve.
    for (const PairDiagnostic& diag : r.diagnostics) {
      REQUIRE(diag.cond_direct >= 1.0);
      REQUIRE(diag.residual < 1e-12);
      if (diag.mu != 0) REQUIRE(std::isfinite(diag.cond_mirror));
    }
  }

  SECTION("single-route reconstruction is also exact") {
    const DensityMatrix dm = random_density(spec, d, 7000u);
    ReconstructOptions opt;
    opt.redundancy = false;
    const ReconstructionResult r =
        reconstruct(spec, probe, char_source_exact(dm, probe), opt);
    REQUIRE(max_abs_diff(r.rho_raw, dm.rho) < 1e-9);
    for (const PairDiagnostic& diag : r.diagnostics)
      if (diag.mu != 0) REQUIRE(std::isnan(diag.cond_mirror));
  }

  SECTION("diagonal-only mode recovers the populations") {
    const DensityMatrix dm = random_density(spec, d, 9000u);
    ReconstructOptions opt;
    opt.diagonal_only = true;
    const ReconstructionResult r =
        reconstruct(spec, probe, char_source_exact(dm, probe), opt);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) {
        if (i == k)
          REQUIRE(std::abs(r.rho_raw(i, i) - dm.rho(i, i)) < 1e-12);
        else
          REQUIRE(r.rho_raw(i, k) == Cx{0.0, 0.0});
      }
  }
}

TEST_CASE("reconstruction is invariant under the thread count", "[reconstruct]") {
  HilbertSpec spec{5, 1.0};
  const Probe probe = chirped_probe(spec, 1.0);
  const DensityMatrix dm = random_density(spec, 3, 51u);
  const CharFn source = char_source_exact(dm, probe);
  ReconstructOptions one, four;
  one.threads = 1;
  four.threads = 4;
  const ReconstructionResult a = reconstruct(spec, probe, source, one);
  const ReconstructionResult b = reconstruct(spec, probe, source, four);
  REQUIRE(max_abs_diff(a.rho_raw, b.rho_raw) <= 1e-15);
}

TEST_CASE("uncoupled product probes leave the paired solves singular",
          "[reconstruct]") {
  // Without pointer cross correlations the two lattice rows are
  // proportional, so every coherence solve is flagged; the populations are
  // still fine.  This is the diagnostic, not an abort: the values are
  // reported with their condition numbers.
  const int d = GENERATE(2, 3, 4);
  HilbertSpec spec{d, 1.0};
  const double s = spec.a0();
  const Probe probe = gaussian_from_widths(s, s, 0.0, 0.0);
  const DensityMatrix dm = random_density(spec, d, 60u);
  const ReconstructionResult r =
      reconstruct(spec, probe, char_source_exact(dm, probe));
  int paired = 0;
  for (const PairDiagnostic& diag : r.diagnostics)
    if (diag.mu != 0) {
      ++paired;
      REQUIRE(diag.flagged);
      REQUIRE(diag.cond_direct > tol::condition_flag);
    } else {
      REQUIRE_FALSE(diag.flagged);
    }
  REQUIRE(paired == d * (d - 1) / 2);
  REQUIRE(r.flagged_count == paired);
  // The populations of the raw matrix are still recovered.
  for (int i = 0; i < d; ++i)
    REQUIRE(std::abs(r.rho_raw(i, i) - dm.rho(i, i)) < 1e-10);
}

TEST_CASE("overwide probes cannot resolve the populations", "[reconstruct]") {
  // At five lattice units of pointer width the probe transform underflows
  // the insensitivity floor at the outer population frequencies.
  const int d = GENERATE(2, 3);
  HilbertSpec spec{d, 1.0};
  const Probe probe = chirped_probe(spec, 5.0);
  const DensityMatrix dm = random_density(spec, d, 61u);
  REQUIRE_THROWS_AS(reconstruct(spec, probe, char_source_exact(dm, probe)),
                    probe_insensitivity_error);
}

TEST_CASE("readout blur round trip", "[reconstruct]") {
  const int d = GENERATE(2, 3, 4);
  const double width_in_a0 = GENERATE(0.1, 0.3);
  HilbertSpec spec{d, 1.0};
  const Probe probe = chirped_probe(spec, 1.0);
  const DensityMatrix dm =
      random_density(spec, d, 70u + static_cast<unsigned>(10 * width_in_a0));
  const double w = width_in_a0 * spec.a0();
  const auto z0 = gaussian_readout_blur(w);
  const CharFn ideal = char_source_exact(dm, probe);
  const CharFn blurred = [&](double pa, double pb) {
    return ideal(pa, pb) * z0(pa, pb);
  };

  SECTION("deblurring restores the exact reconstruction") {
    const ReconstructionResult r =
        reconstruct(spec, probe, apply_readout_deblur(blurred, z0));
    REQUIRE(max_abs_diff(r.rho_raw, dm.rho) < 1e-8);
  }

  SECTION("ignoring the blur visibly degrades the state") {
    if (width_in_a0 < 0.2) return;  // only the wider blur gives a clear floor
    const ReconstructionResult r = reconstruct(spec, probe, blurred);
    REQUIRE(trace_distance(r.rho, dm) > 1e-3);
  }
}

TEST_CASE("unrecoverable frequencies abort the deblur", "[reconstruct]") {
  HilbertSpec spec{2, 1.0};
  const Probe probe = chirped_probe(spec, 1.0);
  const DensityMatrix dm = bloch_state(spec, 1.0, 0.0, 0.0);
  const auto z0 = gaussian_readout_blur(20.0 * spec.a0());
  const CharFn ideal = char_source_exact(dm, probe);
  const CharFn blurred = [&](double pa, double pb) {
    return ideal(pa, pb) * z0(pa, pb);
  };
  REQUIRE_THROWS_AS(
      reconstruct(spec, probe, apply_readout_deblur(blurred, z0)),
      unrecoverable_frequency_error);
  REQUIRE_THROWS_AS(gaussian_readout_blur(-0.1), validation_error);
}

TEST_CASE("empirical source converges toward the state", "[reconstruct]") {
  HilbertSpec spec{2, 1.0};
  const Probe probe = chirped_probe(spec, 1.0);
  const DensityMatrix dm =
      bloch_state(spec, std::sin(0.4 * pi) * std::cos(0.3 * pi),
                  std::sin(0.4 * pi) * std::sin(0.3 * pi), std::cos(0.4 * pi));

  const auto run = [&](int n) {
    const OutcomeSet o = sample_outcomes(dm, probe, n, 2026u);
    const ReconstructionResult r =
        reconstruct(spec, probe, char_source_outcomes(o));
    return r;
  };
  const ReconstructionResult coarse = run(2500);
  const ReconstructionResult fine = run(160000);

  const double err_coarse = trace_distance(coarse.rho, dm);
  const double err_fine = trace_distance(fine.rho, dm);
  REQUIRE(err_fine < err_coarse);
  REQUIRE(err_fine < 0.05);
  // Shot noise makes the two routes disagree by a finite amount.
  REQUIRE(fine.max_route_discrepancy > 0.0);
  REQUIRE(fine.max_route_discrepancy < 0.1);
  REQUIRE(coarse.flagged_count == 0);

  SECTION("empty outcome sets are rejected") {
    OutcomeSet empty;
    empty.spec = spec;
    REQUIRE_THROWS_AS(empirical_char(empty, 0.0, 0.0), validation_error);
    REQUIRE_THROWS_AS(char_source_outcomes(empty), validation_error);
  }
}
