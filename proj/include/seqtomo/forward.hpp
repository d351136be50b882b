// Copyright 2026 seqtomo authors
// SPDX-License-Identifier: Apache-2.0
//
// Forward model of the sequential two-pointer measurement.
//
// The system first kicks pointer A through exp(i A Phi_A), then pointer B
// through exp(i B Phi_B); both pointers are then read out.  Everything
// observable is encoded in the outcome characteristic function
//
//   Z(phi_A, phi_B) = < e^{i phi . J} >
//     = sum_{mu = 1-d}^{d-1}  Mpr(phi; (-mu*a0, 0))
//                             * g(phi_B - mu*a0)
//                             * Msys(phi_A; mu),
//
// where Mpr is the probe transform (probes.hpp), Msys the system Moyal
// function (moyal.hpp) and g the periodized sinc.  On the lattice
// phi_B = mu*a0 the sinc kills every diagonal except mu and its wrap
// partner mu -+ d, leaving the two-point relation
//
//   Z(phi_A, mu*a0) = Mpr(.; (-mu*a0, 0)) * Msys(phi_A; mu)
//       + (-1)^(d-1) * Mpr(.; (-(mu -+ d)*a0, 0)) * Msys(phi_A; mu -+ d),
//
// the parity factor being g evaluated at +-d*a0.  At mu = 0 the partner
// terms vanish entirely and Z factorizes.
//
// The outcome density itself is
//
//   P(J) = (1/d) sum_{m, m', mB} e^{-2 pi i mB (m - m')/d} rho[m, m']
//          * <J - C | rho_pr | J - C'>,
//
// written below through mixed_element with center ((m+m')*a0/2, mB*b0) and
// skew (m'-m)*a0 on the A axis.

#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "seqtomo/moyal.hpp"
#include "seqtomo/probes.hpp"
#include "seqtomo/rng.hpp"

namespace seqtomo {

// ---------------------------------------------------------------------------
// Closed-form characteristic function and outcome density
// ---------------------------------------------------------------------------

// Z(phi_A, phi_B) summed over every diagonal with its sinc weight.
inline Cx exact_char(const DensityMatrix& dm, const Probe& probe, double phi_a,
                     double phi_b) {
  const HilbertSpec& s = dm.spec;
  const double a0 = s.a0();
  Cx acc{0.0, 0.0};
  for (int mu = -(s.d - 1); mu <= s.d - 1; ++mu)
    acc += moyal_pr(probe, phi_a, phi_b, -mu * a0, 0.0) *
           dirichlet_factor(s, phi_b - mu * a0) * moyal_sys(dm, phi_a, mu);
  return acc;
}

// Z on the second-axis lattice phi_B = mu*a0, reduced to the two surviving
// diagonals (one for mu = 0).
inline Cx exact_char_discrete(const DensityMatrix& dm, const Probe& probe,
                              double phi_a, int mu) {
  const HilbertSpec& s = dm.spec;
  if (std::abs(mu) > s.d - 1)
    throw domain_error("lattice frequency index " + std::to_string(mu) +
                       " is outside dimension " + std::to_string(s.d));
  const double a0 = s.a0();
  const double phi_b = mu * a0;
  if (mu == 0)
    return moyal_pr(probe, phi_a, phi_b, 0.0, 0.0) * moyal_sys(dm, phi_a, 0);
  const int partner = mu - (mu > 0 ? s.d : -s.d);
  return moyal_pr(probe, phi_a, phi_b, -mu * a0, 0.0) * moyal_sys(dm, phi_a, mu) +
         parity_sign(s.d) * moyal_pr(probe, phi_a, phi_b, -partner * a0, 0.0) *
             moyal_sys(dm, phi_a, partner);
}

// Weight of the wrapped diagonal in the two-point relation; its decay with
// dimension is what makes the single-diagonal approximation usable.
inline double second_addend_weight(const HilbertSpec& spec, const Probe& probe,
                                   double phi_a, int mu) {
  if (mu == 0 || std::abs(mu) > spec.d - 1)
    throw domain_error("wrapped-diagonal weight needs 0 < |mu| < d");
  const double a0 = spec.a0();
  const int partner = mu - (mu > 0 ? spec.d : -spec.d);
  return std::abs(moyal_pr(probe, phi_a, mu * a0, -partner * a0, 0.0));
}

// Outcome probability density at pointer readings (ja, jb).
inline double joint_pdf(const DensityMatrix& dm, const Probe& probe, double ja,
                        double jb) {
  const HilbertSpec& s = dm.spec;
  const double a0 = s.a0(), b0 = s.b0();
  Cx acc{0.0, 0.0};
  for (int i = 0; i < s.d; ++i)
    for (int k = 0; k < s.d; ++k) {
      const Cx rho_ik = dm.rho(i, k);
      if (std::abs(rho_ik) == 0.0) continue;
      const int two_mi = s.two_m(i), two_mk = s.two_m(k);
      const double center_a = 0.25 * (two_mi + two_mk) * a0;
      const double skew_a = 0.5 * (two_mk - two_mi) * a0;
      for (int ib = 0; ib < s.d; ++ib) {
        const int two_mb = s.two_m(ib);
        // e^{-2 pi i mB (m - m')/d} with doubled labels.
        const double angle = -pi * 0.5 * two_mb * (two_mi - two_mk) / s.d;
        const double center_b = 0.5 * two_mb * b0;
        acc += std::exp(iu * angle) * rho_ik *
               mixed_element(probe, ja - center_a, jb - center_b, skew_a, 0.0);
      }
    }
  return acc.real() / s.d;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

enum class SampleBackend { automatic, kraus, grid };

inline std::string to_string(SampleBackend b) {
  switch (b) {
    case SampleBackend::automatic: return "auto";
    case SampleBackend::kraus: return "kraus";
    case SampleBackend::grid: return "grid";
  }
  return "auto";
}

inline SampleBackend backend_from_string(const std::string& s) {
  if (s == "auto") return SampleBackend::automatic;
  if (s == "kraus") return SampleBackend::kraus;
  if (s == "grid") return SampleBackend::grid;
  throw validation_error("unknown sampling backend '" + s +
                         "' (expected auto, kraus or grid)");
}

struct GridParams {
  int cells_a = 512;
  int cells_b = 512;
  double pad_sigmas = 8.0;  // window half-width beyond the outcome lattice
};

struct OutcomeSet {
  HilbertSpec spec;
  std::vector<std::array<double, 2>> samples;
  std::uint64_t seed = 0;
  SampleBackend backend_used = SampleBackend::automatic;
};

// The sequential-collapse sampler is exact only when each pointer is an
// independent zero-mean pure Gaussian in its position representation: the
// first readout is then a finite Gaussian mixture and the collapse update a
// real Gaussian reweighting.
inline bool kraus_eligible(const Probe& probe) {
  if (!std::holds_alternative<GaussianProbe>(probe)) return false;
  const GaussianProbe& g = std::get<GaussianProbe>(probe);
  if (g.mean.cwiseAbs().maxCoeff() > 0.0) return false;
  const double sa2 = g.cov(0, 0), sb2 = g.cov(1, 1);
  Eigen::Matrix4d pure = Eigen::Vector4d{sa2, sb2, 0.25 / sa2, 0.25 / sb2}
                             .asDiagonal();
  return (g.cov - pure).cwiseAbs().maxCoeff() < 1e-12;
}

namespace detail {

inline constexpr int sample_chunk = 4096;

// Exact sequential sampler for eligible probes.  Draws the pure component,
// collapses it through the A readout, rotates to the conjugate basis and
// reads out B.
class KrausSampler {
 public:
  KrausSampler(const DensityMatrix& dm, const GaussianProbe& probe)
      : spec_(dm.spec),
        sigma_a_(std::sqrt(probe.cov(0, 0))),
        sigma_b_(std::sqrt(probe.cov(1, 1))) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dm.rho);
    weights_.resize(spec_.d);
    for (int i = 0; i < spec_.d; ++i)
      weights_[i] = std::max(es.eigenvalues()(i), 0.0);
    components_ = es.eigenvectors();
    // Conjugate transform, built once; see bases.hpp for the kernel.
    f_.resize(spec_.d, spec_.d);
    for (int i1 = 0; i1 < spec_.d; ++i1)
      for (int i0 = 0; i0 < spec_.d; ++i0)
        f_(i1, i0) =
            std::exp(iu * (pi * spec_.two_m(i0) * spec_.two_m(i1) / (2.0 * spec_.d))) /
            std::sqrt(static_cast<double>(spec_.d));
  }

  std::array<double, 2> draw(RngStream& rng) const {
    const int d = spec_.d;
    Eigen::VectorXcd c = components_.col(rng.pick(weights_));
    Eigen::VectorXd probs(d);
    for (int i = 0; i < d; ++i) probs(i) = std::norm(c(i));
    const int ia = rng.pick(probs);
    const double ja = 0.5 * spec_.two_m(ia) * spec_.a0() + sigma_a_ * rng.normal();
    for (int i = 0; i < d; ++i) {
      const double miss = ja - 0.5 * spec_.two_m(i) * spec_.a0();
      c(i) *= std::exp(-miss * miss / (4.0 * sigma_a_ * sigma_a_));
    }
    Eigen::VectorXcd tilde = f_.adjoint() * c;
    for (int i = 0; i < d; ++i) probs(i) = std::norm(tilde(i));
    const int ib = rng.pick(probs);
    const double jb = 0.5 * spec_.two_m(ib) * spec_.b0() + sigma_b_ * rng.normal();
    return {ja, jb};
  }

 private:
  HilbertSpec spec_;
  double sigma_a_, sigma_b_;
  std::vector<double> weights_;
  Eigen::MatrixXcd components_;
  Eigen::MatrixXcd f_;
};

// Tabulated-density sampler: midpoint-rule pdf table, marginal-then-
// conditional inverse CDF with uniform jitter inside each cell.
class GridSampler {
 public:
  GridSampler(const DensityMatrix& dm, const Probe& probe, const GridParams& gp,
              int threads) {
    if (gp.cells_a < 8 || gp.cells_b < 8)
      throw validation_error("sampling table needs at least 8 cells per axis");
    na_ = gp.cells_a;
    nb_ = gp.cells_b;
    const HilbertSpec& s = dm.spec;
    const Eigen::Vector2d sig = pointer_sigmas(probe);
    const Eigen::Vector2d mean = pointer_means(probe);
    const double span_a = 0.5 * (s.d - 1) * s.a0(), span_b = 0.5 * (s.d - 1) * s.b0();
    lo_a_ = mean(0) - span_a - gp.pad_sigmas * sig(0);
    ha_ = 2.0 * (span_a + gp.pad_sigmas * sig(0)) / na_;
    lo_b_ = mean(1) - span_b - gp.pad_sigmas * sig(1);
    hb_ = 2.0 * (span_b + gp.pad_sigmas * sig(1)) / nb_;

    pdf_.assign(static_cast<size_t>(na_) * nb_, 0.0);
    parallel_for(na_, threads, [&](int i) {
      const double ja = lo_a_ + (i + 0.5) * ha_;
      for (int k = 0; k < nb_; ++k) {
        const double jb = lo_b_ + (k + 0.5) * hb_;
        pdf_[static_cast<size_t>(i) * nb_ + k] =
            std::max(joint_pdf(dm, probe, ja, jb), 0.0);
      }
    });

    row_cdf_.assign(na_ + 1, 0.0);
    col_cdf_.assign(static_cast<size_t>(na_) * (nb_ + 1), 0.0);
    for (int i = 0; i < na_; ++i) {
      double row = 0.0;
      for (int k = 0; k < nb_; ++k) {
        row += pdf_[static_cast<size_t>(i) * nb_ + k];
        col_cdf_[static_cast<size_t>(i) * (nb_ + 1) + k + 1] = row;
      }
      if (row > 0.0)
        for (int k = 1; k <= nb_; ++k)
          col_cdf_[static_cast<size_t>(i) * (nb_ + 1) + k] /= row;
      row_cdf_[i + 1] = row_cdf_[i] + row;
    }
    const double mass = row_cdf_[na_] * ha_ * hb_;
    if (std::abs(1.0 - mass) > tol::grid_mass_deficit)
      throw extent_error("sampling window keeps probability mass " +
                         std::to_string(mass) +
                         "; enlarge the table extent or cell count");
    for (int i = 1; i <= na_; ++i) row_cdf_[i] /= row_cdf_[na_];
  }

  std::array<double, 2> draw(RngStream& rng) const {
    const double u = rng.uniform();
    const int i = locate(row_cdf_.data(), na_, u);
    const double ta = (u - row_cdf_[i]) / (row_cdf_[i + 1] - row_cdf_[i]);
    const double v = rng.uniform();
    const double* cc = col_cdf_.data() + static_cast<size_t>(i) * (nb_ + 1);
    const int k = locate(cc, nb_, v);
    const double tb = (v - cc[k]) / (cc[k + 1] - cc[k]);
    return {lo_a_ + (i + ta) * ha_, lo_b_ + (k + tb) * hb_};
  }

 private:
  static int locate(const double* cdf, int n, double u) {
    int lo = 0, hi = n;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (cdf[mid] <= u ? lo : hi) = mid;
    }
    return lo;
  }

  int na_ = 0, nb_ = 0;
  double lo_a_ = 0.0, ha_ = 0.0, lo_b_ = 0.0, hb_ = 0.0;
  std::vector<double> pdf_, row_cdf_, col_cdf_;
};

}  // namespace detail

// Draws n outcome pairs.  Deterministic in (seed, backend, table params):
// sample index range [c*4096, (c+1)*4096) always comes from the stream
// keyed (seed, c), so the byte-exact result is independent of the thread
// count.  Requesting the collapse backend for an ineligible probe throws.
inline OutcomeSet sample_outcomes(const DensityMatrix& dm, const Probe& probe,
                                  std::int64_t n, std::uint64_t seed,
                                  SampleBackend backend = SampleBackend::automatic,
                                  int threads = 1,
                                  const GridParams& gp = GridParams{}) {
  validate_density(dm);
  validate_probe(probe);
  if (n < 0) throw validation_error("sample count must be nonnegative");
  if (backend == SampleBackend::automatic)
    backend = kraus_eligible(probe) ? SampleBackend::kraus : SampleBackend::grid;
  if (backend == SampleBackend::kraus && !kraus_eligible(probe))
    throw validation_error(
        "collapse sampling needs an uncorrelated zero-mean pure Gaussian "
        "probe; use the grid backend");

  OutcomeSet out;
  out.spec = dm.spec;
  out.seed = seed;
  out.backend_used = backend;
  out.samples.resize(static_cast<size_t>(n));
  const int chunks =
      static_cast<int>((n + detail::sample_chunk - 1) / detail::sample_chunk);

  auto run = [&](const auto& sampler) {
    parallel_for(chunks, threads, [&](int c) {
      RngStream rng(seed, static_cast<std::uint64_t>(c));
      const std::int64_t begin = static_cast<std::int64_t>(c) * detail::sample_chunk;
      const std::int64_t end = std::min(n, begin + detail::sample_chunk);
      for (std::int64_t i = begin; i < end; ++i)
        out.samples[static_cast<size_t>(i)] = sampler.draw(rng);
    });
  };

  if (backend == SampleBackend::kraus) {
    run(detail::KrausSampler(dm, std::get<GaussianProbe>(probe)));
  } else {
    run(detail::GridSampler(dm, probe, gp, threads));
  }
  return out;
}

}  // namespace seqtomo
