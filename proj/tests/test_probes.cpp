// Copyright 2026 seqtomo authors
// SPDX-License-Identifier: Apache-2.0
//
// Probe states: Gaussian family construction and admissibility, the two
// kernel transforms against direct wavefunction quadrature, and tabulated
// probes against their Gaussian counterparts.

#include <catch2/catch_amalgamated.hpp>

#include <functional>

#include "seqtomo/probes.hpp"

using namespace seqtomo;

namespace {

// Explicit wavefunction of the pure probe family: the *definition* that
// gaussian_from_widths encodes as a covariance matrix.  Unnormalized;
// quadratures normalize numerically.
std::function<Cx(double, double)> probe_wave(double sa, double sb, double corr,
                                             double chirp,
                                             Eigen::Vector4d mean =
                                                 Eigen::Vector4d::Zero()) {
  Eigen::Matrix2d jj;
  jj << sa * sa, corr * sa * sb, corr * sa * sb, sb * sb;
  const Eigen::Matrix2d w = jj.inverse();
  const double beta = chirp / (sa * sb);
  return [=](double ja, double jb) {
    const double xa = ja - mean(0), xb = jb - mean(1);
    const double quad =
        -0.25 * (w(0, 0) * xa * xa + 2.0 * w(0, 1) * xa * xb + w(1, 1) * xb * xb);
    // The momentum operator is +i d/dJ, so a factor e^{-i p J} shifts the
    // mean momentum to +p.
    const double phase = beta * xa * xb - mean(2) * ja - mean(3) * jb;
    return std::exp(Cx{quad, phase});
  };
}

// Trapezoid quadrature of f over [-L, L]^2 with n points per axis.
Cx trapz2(const std::function<Cx(double, double)>& f, double el, int n) {
  const double h = 2.0 * el / (n - 1);
  Cx acc{0.0, 0.0};
  for (int i = 0; i < n; ++i) {
    const double wa = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    const double x = -el + i * h;
    for (int k = 0; k < n; ++k) {
      const double wb = (k == 0 || k == n - 1) ? 0.5 : 1.0;
      acc += wa * wb * f(x, -el + k * h);
    }
  }
  return acc * h * h;
}

struct KernelPoint {
  double pa, pb, ja, jb;
};

}  // namespace

TEST_CASE("Gaussian kernels match direct wavefunction quadrature", "[probes]") {
  struct Params {
    double sa, sb, corr, chirp;
  };
  const Params prm = GENERATE(Params{1.0, 1.0, 0.0, 0.0},
                              Params{1.3, 0.8, 0.0, 0.9},
                              Params{0.9, 1.1, 0.5, 0.0},
                              Params{0.7, 1.2, -0.3, 0.6});
  GaussianProbe p = gaussian_from_widths(prm.sa, prm.sb, prm.corr, prm.chirp);
  auto psi = probe_wave(prm.sa, prm.sb, prm.corr, prm.chirp);
  const double norm =
      trapz2([&](double a, double b) { return psi(a, b) * std::conj(psi(a, b)); },
             10.0, 801)
          .real();

  const KernelPoint pt = GENERATE(KernelPoint{0.0, 0.0, 0.0, 0.0},
                                  KernelPoint{0.7, -0.4, 0.9, 0.0},
                                  KernelPoint{-1.1, 0.6, -0.5, 1.2},
                                  KernelPoint{0.3, 1.9, 1.4, -0.8});
  SECTION("integral transform") {
    const Cx oracle = trapz2(
                          [&](double a, double b) {
                            return std::exp(Cx{0.0, pt.pa * a + pt.pb * b}) *
                                   psi(a + 0.5 * pt.ja, b + 0.5 * pt.jb) *
                                   std::conj(psi(a - 0.5 * pt.ja, b - 0.5 * pt.jb));
                          },
                          10.0, 801) /
                      norm;
    REQUIRE(std::abs(moyal_pr(p, pt.pa, pt.pb, pt.ja, pt.jb) - oracle) < 1e-9);
  }
  SECTION("pointwise element") {
    const Cx oracle = psi(pt.pa + 0.5 * pt.ja, pt.pb + 0.5 * pt.jb) *
                      std::conj(psi(pt.pa - 0.5 * pt.ja, pt.pb - 0.5 * pt.jb)) /
                      norm;
    REQUIRE(std::abs(mixed_element(p, pt.pa, pt.pb, pt.ja, pt.jb) - oracle) <
            1e-10);
  }
}

TEST_CASE("mean-shifted kernels carry the right phases", "[probes]") {
  GaussianProbe p = gaussian_from_widths(1.1, 0.9, 0.0, 0.5);
  p.mean << 0.8, -0.3, 0.4, -0.9;
  auto psi = probe_wave(1.1, 0.9, 0.0, 0.5, p.mean);
  const double norm =
      trapz2([&](double a, double b) { return psi(a, b) * std::conj(psi(a, b)); },
             12.0, 901)
          .real();
  const KernelPoint pt = GENERATE(KernelPoint{0.5, -0.2, 0.6, 0.3},
                                  KernelPoint{-0.9, 1.1, -0.4, 0.8});
  const Cx quad = trapz2(
                      [&](double a, double b) {
                        return std::exp(Cx{0.0, pt.pa * a + pt.pb * b}) *
                               psi(a + 0.5 * pt.ja, b + 0.5 * pt.jb) *
                               std::conj(psi(a - 0.5 * pt.ja, b - 0.5 * pt.jb));
                      },
                      12.0, 901) /
                  norm;
  REQUIRE(std::abs(moyal_pr(p, pt.pa, pt.pb, pt.ja, pt.jb) - quad) < 1e-8);
  const Cx elem = psi(pt.pa + 0.5 * pt.ja, pt.pb + 0.5 * pt.jb) *
                  std::conj(psi(pt.pa - 0.5 * pt.ja, pt.pb - 0.5 * pt.jb)) / norm;
  REQUIRE(std::abs(mixed_element(p, pt.pa, pt.pb, pt.ja, pt.jb) - elem) < 1e-9);
}

TEST_CASE("kernel normalization and symmetry", "[probes]") {
  GaussianProbe p = gaussian_from_widths(0.8, 1.4, -0.2, 0.7);
  p.mean << 0.1, 0.2, -0.3, 0.4;
  REQUIRE(std::abs(moyal_pr(p, 0, 0, 0, 0) - Cx{1.0, 0.0}) < 1e-15);
  for (double phi : {0.3, -1.2})
    for (double j : {0.5, -0.9}) {
      const Cx fwd = moyal_pr(p, phi, -0.4, j, 0.8);
      const Cx rev = moyal_pr(p, -phi, 0.4, -j, -0.8);
      REQUIRE(std::abs(std::conj(fwd) - rev) < 1e-14);
    }
  // Joint element at the origin of the standard product probe: each axis
  // contributes |psi(0)|^2 = (2 pi)^{-1/2}, the pair (2 pi)^{-1}.
  GaussianProbe std_probe = gaussian_from_widths(1.0, 1.0);
  REQUIRE(std::abs(mixed_element(std_probe, 0, 0, 0, 0) - 1.0 / (2.0 * pi)) <
          1e-14);
}

TEST_CASE("pointer widths survive correlation and chirp", "[probes]") {
  const double sa = GENERATE(0.2, 1.0, 5.0);
  const double kappa = GENERATE(0.0, 1.0, 2.0);
  const double corr = GENERATE(0.0, 0.9, -0.9);
  GaussianProbe p = gaussian_from_widths(sa, 2.0 * sa, corr, kappa);
  REQUIRE(p.cov(0, 0) == Catch::Approx(sa * sa).epsilon(1e-14));
  REQUIRE(p.cov(1, 1) == Catch::Approx(4.0 * sa * sa).epsilon(1e-14));
  REQUIRE(p.cov(0, 1) == Catch::Approx(corr * 2.0 * sa * sa).margin(1e-14));
  REQUIRE_NOTHROW(validate_probe(p));
  if (kappa != 0.0) {
    // The cross covariances that make sequential pair-solves invertible.
    const double beta = kappa / (sa * 2.0 * sa);
    REQUIRE(p.cov(1, 2) == Catch::Approx(-beta * 4.0 * sa * sa).epsilon(1e-12));
    REQUIRE(p.cov(0, 3) == Catch::Approx(-beta * sa * sa).epsilon(1e-12));
  }
}

TEST_CASE("construction rejects out-of-range parameters", "[probes]") {
  REQUIRE_THROWS_AS(gaussian_from_widths(0.0, 1.0), validation_error);
  REQUIRE_THROWS_AS(gaussian_from_widths(1.0, -2.0), validation_error);
  REQUIRE_THROWS_AS(gaussian_from_widths(1.0, 1.0, 1.0), validation_error);
  REQUIRE_THROWS_AS(gaussian_from_widths(1.0, 1.0, -1.2), validation_error);
}

TEST_CASE("covariance admissibility separates quantum from classical",
          "[probes]") {
  SECTION("correlated pointers with uncorrelated minimal momenta are not a "
          "state") {
    // Purity would force the momentum block to inherit the correlation;
    // keeping it diagonal undershoots the uncertainty bound.
    GaussianProbe p;
    p.cov << 1.0, 0.5, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0,
        0.0, 0.0, 0.25;
    REQUIRE_THROWS_AS(validate_probe(p), validation_error);
  }
  SECTION("momenta narrower than the uncertainty bound") {
    GaussianProbe p;
    p.cov = Eigen::Vector4d{1.0, 1.0, 0.1, 0.1}.asDiagonal();
    REQUIRE_THROWS_AS(validate_probe(p), validation_error);
  }
  SECTION("vacuum-like diagonal states pass") {
    for (double s : {0.3, 1.0, 4.0}) {
      GaussianProbe p;
      p.cov = Eigen::Vector4d{s * s, s * s, 0.25 / (s * s), 0.25 / (s * s)}
                  .asDiagonal();
      REQUIRE_NOTHROW(validate_probe(p));
    }
  }
  SECTION("asymmetric and non-positive matrices are rejected") {
    GaussianProbe p;
    p.cov(0, 1) = 0.3;  // not mirrored
    REQUIRE_THROWS_AS(validate_probe(p), validation_error);
    GaussianProbe q;
    q.cov = Eigen::Vector4d{1.0, -0.5, 1.0, 1.0}.asDiagonal();
    REQUIRE_THROWS_AS(validate_probe(q), validation_error);
  }
}

TEST_CASE("tabulated Gaussian axes reproduce the closed forms", "[probes]") {
  const double sigma = 0.9;
  GridProbe gp{gaussian_grid_axis(sigma, sigma / 25.0, 12.0 * sigma),
               gaussian_grid_axis(sigma, sigma / 25.0, 12.0 * sigma)};
  REQUIRE_NOTHROW(validate_probe(gp));
  GaussianProbe ref = gaussian_from_widths(sigma, sigma);

  SECTION("grid-aligned shifts agree to 1e-6") {
    const double h = gp.a.h;
    for (double phi : {0.0, 0.7, -1.9, 3.1})
      for (int cells : {0, 4, -10, 24}) {
        const double j = 2.0 * cells * h;  // j/2 on the grid
        const Cx got = moyal_pr(gp, phi, -0.5 * phi, j, 2.0 * h);
        const Cx want = moyal_pr(ref, phi, -0.5 * phi, j, 2.0 * h);
        REQUIRE(std::abs(got - want) < 1e-6);
      }
  }
  SECTION("off-grid shifts stay within the interpolation budget") {
    // Bilinear interpolation error scales as (h/sigma)^2; the 1e-4 budget
    // needs a step around sigma/40.
    GridProbe fine{gaussian_grid_axis(sigma, sigma / 40.0, 12.0 * sigma),
                   gaussian_grid_axis(sigma, sigma / 40.0, 12.0 * sigma)};
    for (double phi : {0.4, -1.1})
      for (double j : {0.37, -1.23, 2.71}) {
        const Cx got = moyal_pr(fine, phi, 0.2, j, 0.61);
        const Cx want = moyal_pr(ref, phi, 0.2, j, 0.61);
        REQUIRE(std::abs(got - want) < 1e-4);
      }
  }
  SECTION("pointwise elements agree") {
    REQUIRE(std::abs(mixed_element(gp, 0, 0, 0, 0) -
                     mixed_element(ref, 0, 0, 0, 0)) < 1e-6);
    REQUIRE(std::abs(mixed_element(gp, 0.5, -0.3, 0.7, 0.2) -
                     mixed_element(ref, 0.5, -0.3, 0.7, 0.2)) < 1e-4);
  }
  SECTION("pointer moments recovered from the table") {
    const Eigen::Vector2d sig = pointer_sigmas(Probe{gp});
    REQUIRE(sig(0) == Catch::Approx(sigma).epsilon(1e-3));
    REQUIRE(sig(1) == Catch::Approx(sigma).epsilon(1e-3));
    const Eigen::Vector2d mu = pointer_means(Probe{gp});
    REQUIRE(std::abs(mu(0)) < 1e-9);
    REQUIRE(std::abs(mu(1)) < 1e-9);
  }
}

TEST_CASE("tabulated-probe validation catches corruption", "[probes]") {
  GridProbe gp{gaussian_grid_axis(1.0, 0.05, 10.0),
               gaussian_grid_axis(1.0, 0.05, 10.0)};
  SECTION("trace drift") {
    gp.a.rho *= 1.001;
    REQUIRE_THROWS_AS(validate_probe(gp), validation_error);
  }
  SECTION("hermiticity breach") {
    gp.b.rho(3, 5) += Cx{0.0, 1e-6};
    REQUIRE_THROWS_AS(validate_probe(gp), validation_error);
  }
  SECTION("bad step") {
    gp.a.h = 0.0;
    REQUIRE_THROWS_AS(validate_probe(gp), validation_error);
  }
  SECTION("tiny table") {
    gp.a.rho = Eigen::MatrixXcd::Ones(1, 1);
    REQUIRE_THROWS_AS(validate_probe(gp), validation_error);
  }
}

TEST_CASE("variant dispatch reaches both implementations", "[probes]") {
  Probe g = gaussian_from_widths(1.0, 1.0);
  Probe t = GridProbe{gaussian_grid_axis(1.0, 0.04, 10.0),
                      gaussian_grid_axis(1.0, 0.04, 10.0)};
  REQUIRE(std::abs(moyal_pr(g, 0.3, 0.1, 0.0, 0.0) -
                   moyal_pr(t, 0.3, 0.1, 0.0, 0.0)) < 1e-6);
  const Eigen::Vector2d sg = pointer_sigmas(g);
  REQUIRE(sg(0) == 1.0);
  REQUIRE_NOTHROW(validate_probe(g));
  REQUIRE_NOTHROW(validate_probe(t));
}
