// Copyright 2026 seqtomo authors
// SPDX-License-Identifier: Apache-2.0
//
// State reconstruction from the outcome characteristic function.
//
// The pipeline samples Z on the second-axis lattice phi_B = mu*a0:
//
//   mu = 0:   Z factorizes, so Msys(phi; 0) = Z(phi, 0) / Mpr(phi; 0)
//             at the d frequencies phi = 2*pi*Mbar_A/(a0*d).
//
//   mu != 0:  Z couples the diagonal mu to its wrap partner mu - d.  The
//             pair (Z(phi, mu*a0), Z(phi, (mu-d)*a0)) gives two linear
//             equations for the two unknowns (Msys(phi; mu),
//             Msys(phi; mu-d)):
//
//               [ Mpr(.; -mu*a0)        s*Mpr(.; -(mu-d)*a0) ] [x]   [Z ]
//               [ s*Mpr(.; -mu*a0)_bar  Mpr(.; -(mu-d)*a0)_bar] [y] = [Z_bar]
//
//             with s = (-1)^(d-1) and _bar marking the phi_B = (mu-d)*a0
//             row.  Each diagonal value is estimated twice: directly
//             ("route 1") and as the conjugate of the mirrored solve at
//             (d-mu, -phi) ("route 2"); the two are combined with inverse-
//             condition weights and their discrepancy recorded.
//
// The assembled lattice table then inverts diagonal-by-diagonal
// (moyal.hpp) and the raw matrix is projected onto the density manifold by
// eigenvalue simplex projection.

#pragma once

#include <functional>
#include <limits>
#include <optional>

#include "seqtomo/forward.hpp"

namespace seqtomo {

// ---------------------------------------------------------------------------
// Characteristic-function sources
// ---------------------------------------------------------------------------

using CharFn = std::function<Cx(double phi_a, double phi_b)>;

// Closed-form source; the reconstruction consuming it must return the input
// state up to rounding.  On the second-axis lattice this evaluates the
// two-term closed form rather than the full diagonal sum: the sum leaves
// eps-level residue from the near-zero weights of the unselected diagonals,
// and the worst-conditioned paired solves amplify that residue by the
// inverse of their smallest singular value.
inline CharFn char_source_exact(DensityMatrix dm, Probe probe) {
  validate_density(dm);
  validate_probe(probe);
  return [dm = std::move(dm), probe = std::move(probe)](double pa, double pb) {
    const double a0 = dm.spec.a0();
    const long mu = std::llround(pb / a0);
    if (std::labs(mu) < dm.spec.d &&
        std::abs(pb - mu * a0) <= 1e-12 * std::max(1.0, std::abs(pb)))
      return exact_char_discrete(dm, probe, pa, static_cast<int>(mu));
    return exact_char(dm, probe, pa, pb);
  };
}

// Plain average of e^{i phi . J} over recorded outcomes.
inline Cx empirical_char(const OutcomeSet& o, double phi_a, double phi_b) {
  if (o.samples.empty()) throw validation_error("empty outcome set");
  Cx acc{0.0, 0.0};
  for (const auto& s : o.samples)
    acc += std::exp(iu * (phi_a * s[0] + phi_b * s[1]));
  return acc / static_cast<double>(o.samples.size());
}

// View over an outcome set; the set must outlive the returned function.
inline CharFn char_source_outcomes(const OutcomeSet& o) {
  if (o.samples.empty()) throw validation_error("empty outcome set");
  return [&o](double pa, double pb) { return empirical_char(o, pa, pb); };
}

// Transfer function of a Gaussian readout blur of width w on both pointer
// axes: recorded outcomes J + noise multiply Z by this factor.
inline std::function<Cx(double, double)> gaussian_readout_blur(double width) {
  if (!(width >= 0.0))
    throw validation_error("blur width must be nonnegative");
  return [width](double pa, double pb) {
    return Cx{std::exp(-0.5 * width * width * (pa * pa + pb * pb)), 0.0};
  };
}

// Divides a source by the readout transfer function z0.  Frequencies where
// |z0| has decayed below tolerance are unrecoverable and abort.
inline CharFn apply_readout_deblur(CharFn source,
                                   std::function<Cx(double, double)> z0) {
  return [source = std::move(source), z0 = std::move(z0)](double pa, double pb) {
    const Cx t = z0(pa, pb);
    if (std::abs(t) <= tol::unrecoverable_frequency)
      throw unrecoverable_frequency_error(
          "readout transfer function is " + std::to_string(std::abs(t)) +
          " at (" + std::to_string(pa) + ", " + std::to_string(pb) +
          "); this frequency cannot be deblurred");
    return source(pa, pb) / t;
  };
}

// ---------------------------------------------------------------------------
// Reconstruction
// ---------------------------------------------------------------------------

struct ReconstructOptions {
  bool redundancy = true;      // combine mirrored solves
  bool diagonal_only = false;  // recover populations only
  double condition_flag = tol::condition_flag;
  int threads = 1;
};

struct PairDiagnostic {
  int mu = 0;                  // diagonal being recovered (0 for the direct path)
  int two_mbar_a = 0;          // doubled lattice label
  double phi_a = 0.0;
  double cond_direct = 0.0;    // route 1 condition number (1/|Mpr| at mu = 0)
  double cond_mirror = std::numeric_limits<double>::quiet_NaN();
  double residual = 0.0;       // route 1 linear-system residual
  double discrepancy = std::numeric_limits<double>::quiet_NaN();  // |route1 - route2|
  bool flagged = false;        // no route below the condition threshold
};

struct ReconstructionResult {
  Eigen::MatrixXcd rho_raw;         // straight from the lattice inversion
  DensityMatrix rho;                // nearest density matrix
  std::vector<PairDiagnostic> diagnostics;
  int flagged_count = 0;
  double hermiticity_violation = 0.0;   // max |raw - raw^dag| element
  double max_route_discrepancy = 0.0;   // worst two-route disagreement
  double trace_deviation = 0.0;         // |tr(raw) - 1|
};

// Nearest density matrix in Frobenius norm: Hermitize, project the spectrum
// onto the probability simplex, reassemble.
inline DensityMatrix project_to_density(const HilbertSpec& spec,
                                        const Eigen::MatrixXcd& raw) {
  spec.validate();
  if (raw.rows() != spec.d || raw.cols() != spec.d)
    throw validation_error("matrix shape does not match dimension");
  const Eigen::MatrixXcd herm = 0.5 * (raw + raw.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
  Eigen::VectorXd lam = es.eigenvalues();

  // Simplex projection (Euclidean): shift the k largest eigenvalues by a
  // common theta so they sum to one, zero the rest.
  Eigen::VectorXd sorted = lam;
  std::sort(sorted.data(), sorted.data() + sorted.size(),
            std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (int k = 0; k < sorted.size(); ++k) {
    cum += sorted(k);
    const double cand = (1.0 - cum) / (k + 1);
    if (sorted(k) + cand > 0.0) theta = cand;
  }
  for (int i = 0; i < lam.size(); ++i) lam(i) = std::max(lam(i) + theta, 0.0);

  const Eigen::MatrixXcd projected = es.eigenvectors() *
                                     lam.asDiagonal() *
                                     es.eigenvectors().adjoint();
  return make_density(spec, 0.5 * (projected + projected.adjoint()));
}

// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (!(a.spec == b.spec)) throw validation_error("fidelity needs matching specs");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ea(a.rho);
  Eigen::VectorXd lam = ea.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXcd root = ea.eigenvectors() *
                                lam.cwiseSqrt().asDiagonal() *
                                ea.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> em(root * b.rho * root,
                                                     Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (int i = 0; i < em.eigenvalues().size(); ++i)
    s += std::sqrt(std::max(em.eigenvalues()(i), 0.0));
  return s * s;
}

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (!(a.spec == b.spec))
    throw validation_error("trace distance needs matching specs");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      (a.rho - b.rho).eval(), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

namespace detail {

// Every characteristic-function evaluation the pipeline needs, keyed
// exactly: phi_a = pi*num/(a0*den), phi_b = mu_b*a0.
struct CharKey {
  int num, den, mu_b;
  bool operator<(const CharKey& o) const {
    return std::tie(num, den, mu_b) < std::tie(o.num, o.den, o.mu_b);
  }
  bool operator==(const CharKey& o) const {
    return num == o.num && den == o.den && mu_b == o.mu_b;
  }
};

struct PairSolution {
  Cx x, y;        // diagonals mu and mu - d at phi_a
  double cond;
  double residual;
};

}  // namespace detail

inline ReconstructionResult reconstruct(const HilbertSpec& spec,
                                        const Probe& probe, const CharFn& source,
                                        const ReconstructOptions& opt = {}) {
  spec.validate();
  validate_probe(probe);
  const int d = spec.d;
  const double a0 = spec.a0();
  const double sign = parity_sign(d);

  // -- gather the lattice evaluations, each computed exactly once ----------
  std::vector<detail::CharKey> keys;
  for (int t : diagonal_grid(spec, 0)) keys.push_back({t, d, 0});
  if (!opt.diagonal_only)
    for (int nu = 1; nu <= d - 1; ++nu)
      for (int t : diagonal_grid(spec, nu)) {
        keys.push_back({t, d - nu, nu});
        keys.push_back({t, d - nu, nu - d});
        if (opt.redundancy) {
          keys.push_back({-t, d - nu, d - nu});
          keys.push_back({-t, d - nu, -nu});
        }
      }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<Cx> values(keys.size());
  parallel_for(static_cast<int>(keys.size()), opt.threads, [&](int i) {
    const detail::CharKey& k = keys[static_cast<size_t>(i)];
    values[static_cast<size_t>(i)] =
        source(pi * k.num / (a0 * k.den), k.mu_b * a0);
  });
  auto z_at = [&](int num, int den, int mu_b) {
    const detail::CharKey want{num, den, mu_b};
    const auto it = std::lower_bound(keys.begin(), keys.end(), want);
    if (it == keys.end() || !(*it == want))
      throw incomplete_table_error("internal: characteristic value " +
                                   std::to_string(num) + "/" +
                                   std::to_string(den) + ", " +
                                   std::to_string(mu_b) + " was not gathered");
    return values[static_cast<size_t>(it - keys.begin())];
  };

  ReconstructionResult out;
  MoyalTable table(spec);

  // -- mu = 0: plain division ----------------------------------------------
  for (int t : diagonal_grid(spec, 0)) {
    const double phi_a = pi * t / (a0 * d);
    const Cx mpr0 = moyal_pr(probe, phi_a, 0.0, 0.0, 0.0);
    if (std::abs(mpr0) < tol::probe_insensitive)
      throw probe_insensitivity_error(
          "probe transform is " + std::to_string(std::abs(mpr0)) +
          " at the population frequency " + std::to_string(phi_a) +
          "; this probe cannot resolve the populations");
    table.set(0, t, z_at(t, d, 0) / mpr0);
    PairDiagnostic diag;
    diag.mu = 0;
    diag.two_mbar_a = t;
    diag.phi_a = phi_a;
    diag.cond_direct = 1.0 / std::abs(mpr0);
    diag.flagged = diag.cond_direct > opt.condition_flag;
    out.diagnostics.push_back(diag);
  }

  // -- mu != 0: paired solves with mirrored redundancy ---------------------
  // The frequency is carried as the exact pair (num, den) with
  // phi_a = pi*num/(a0*den): the mirrored solve runs on the lattice of a
  // different diagonal than its own, so den cannot be derived from mu.
  auto pair_solve = [&](int mu, int num, int den) {
    const double phi_a = pi * num / (a0 * den);
    const int partner = mu - d;  // mu in [1, d-1] here
    Eigen::Matrix2cd m;
    m << moyal_pr(probe, phi_a, mu * a0, -mu * a0, 0.0),
        sign * moyal_pr(probe, phi_a, mu * a0, -partner * a0, 0.0),
        sign * moyal_pr(probe, phi_a, partner * a0, -mu * a0, 0.0),
        moyal_pr(probe, phi_a, partner * a0, -partner * a0, 0.0);
    Eigen::Vector2cd rhs;
    rhs << z_at(num, den, mu), z_at(num, den, partner);
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(m, Eigen::ComputeFullU |
                                                  Eigen::ComputeFullV);
    detail::PairSolution sol;
    const double smin = svd.singularValues()(1);
    sol.cond = smin > 0.0 ? svd.singularValues()(0) / smin
                          : std::numeric_limits<double>::infinity();
    const Eigen::Vector2cd v = svd.solve(rhs);
    sol.x = v(0);
    sol.y = v(1);
    sol.residual = (m * v - rhs).cwiseAbs().maxCoeff();
    return sol;
  };

  if (!opt.diagonal_only) {
    for (int nu = 1; nu <= d - 1; ++nu)
      for (int t : diagonal_grid(spec, nu)) {
        const double phi_a = pi * t / (a0 * (d - nu));
        const detail::PairSolution direct = pair_solve(nu, t, d - nu);
        PairDiagnostic diag;
        diag.mu = nu;
        diag.two_mbar_a = t;
        diag.phi_a = phi_a;
        diag.cond_direct = direct.cond;
        diag.residual = direct.residual;
        Cx value = direct.x;
        double best_cond = direct.cond;
        if (opt.redundancy) {
          // Mirrored estimate: conj of the wrap partner of the (d-nu) solve
          // at -phi_a; the wrap partner is (d-nu) - d = -nu, whose conjugate
          // at the reflected frequency is the +nu diagonal again.
          const detail::PairSolution mirror = pair_solve(d - nu, -t, d - nu);
          const Cx other = std::conj(mirror.y);
          diag.cond_mirror = mirror.cond;
          diag.discrepancy = std::abs(direct.x - other);
          const double w1 = 1.0 / direct.cond, w2 = 1.0 / mirror.cond;
          value = (w1 * direct.x + w2 * other) / (w1 + w2);
          best_cond = std::min(direct.cond, mirror.cond);
          out.max_route_discrepancy =
              std::max(out.max_route_discrepancy, diag.discrepancy);
        }
        diag.flagged = best_cond > opt.condition_flag;
        table.set(nu, t, value);
        out.diagnostics.push_back(diag);
      }
    // Lower diagonals by conjugate reflection of the assembled values.
    for (int nu = 1; nu <= d - 1; ++nu)
      for (int t : diagonal_grid(spec, nu))
        table.set(-nu, t, std::conj(table.at(nu, -t)));
  }

  for (const PairDiagnostic& diag : out.diagnostics)
    if (diag.flagged) ++out.flagged_count;

  // -- invert and project ---------------------------------------------------
  if (opt.diagonal_only) {
    // Populations only: the mu = 0 leg of the inverse transform.
    const std::vector<int> grid = diagonal_grid(spec, 0);
    Eigen::MatrixXcd raw = Eigen::MatrixXcd::Zero(d, d);
    for (int k = 0; k < d; ++k) {
      Cx acc{0.0, 0.0};
      for (int t : grid)
        acc += std::exp(iu * (-pi * 0.5 * t * grid[k] / d)) * table.at(0, t) /
               static_cast<double>(d);
      const int idx = spec.index_of_two_m(grid[k]);
      raw(idx, idx) = acc;
    }
    out.rho_raw = raw;
  } else {
    out.rho_raw = invert_moyal(table);
  }
  out.hermiticity_violation =
      (out.rho_raw - out.rho_raw.adjoint()).cwiseAbs().maxCoeff();
  out.trace_deviation = std::abs(out.rho_raw.trace() - Cx{1.0, 0.0});
  out.rho = project_to_density(spec, out.rho_raw);
  return out;
}

}  // namespace seqtomo
