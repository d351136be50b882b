// Copyright 2026 seqtomo authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-detector probe states and their two kernel transforms.
//
// The probe carries four canonical coordinates ordered (J_A, J_B, Phi_A,
// Phi_B): pointer positions J and their conjugate momenta Phi, with
// [Phi_a, J_a] = i and  exp(i*x*Phi_a)|J_a> = |J_a + x>.  Two kernels feed
// the forward model and the reconstruction:
//
//   mixed_element(J, j) = <J + j/2 | rho_pr | J - j/2>,
//   moyal_pr(phi, j)    = integral  e^{i phi . J} mixed_element(J, j) dJ.
//
// Note the convention: moyal_pr is the *integral* transform above.  For a
// Gaussian state it equals the Weyl characteristic function with the sign
// of j flipped,
//
//   moyal_pr(phi, j) = exp(i m . v - v^T cov v / 2),  v = (phi, -j),
//
// which matters only for probes with J-Phi cross covariance (the two
// conventions agree on real symmetric states).

#pragma once

#include <variant>

#include "seqtomo/core.hpp"

namespace seqtomo {

// ---------------------------------------------------------------------------
// Gaussian probes
// ---------------------------------------------------------------------------

struct GaussianProbe {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();   // (J_A, J_B, Phi_A, Phi_B)
  Eigen::Matrix4d cov = Eigen::Matrix4d::Identity();
};

// Symplectic form matching the coordinate order: [J_a, Phi_b] = -i delta_ab.
inline Eigen::Matrix4d symplectic_form() {
  Eigen::Matrix4d omega = Eigen::Matrix4d::Zero();
  omega(0, 2) = -1.0;
  omega(1, 3) = -1.0;
  omega(2, 0) = 1.0;
  omega(3, 1) = 1.0;
  return omega;
}

// A 4x4 covariance describes a quantum state iff cov + i*Omega/2 >= 0.
// Rejects asymmetric, non-positive or uncertainty-violating matrices.
inline void validate_probe(const GaussianProbe& p) {
  if (!p.mean.allFinite() || !p.cov.allFinite())
    throw validation_error("probe moments must be finite");
  const double asym = (p.cov - p.cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12)
    throw validation_error("probe covariance is not symmetric: max deviation " +
                           std::to_string(asym));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(p.cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw validation_error("probe covariance is not positive definite");
  const Eigen::Matrix4cd admissible =
      p.cov.cast<Cx>() + Cx{0.0, 0.5} * symplectic_form().cast<Cx>();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> qs(admissible,
                                                     Eigen::EigenvaluesOnly);
  if (qs.eigenvalues().minCoeff() < -1e-10)
    throw validation_error(
        "probe covariance violates the uncertainty relation (cov + i*Omega/2 "
        "has eigenvalue " +
        std::to_string(qs.eigenvalues().minCoeff()) + ")");
}

// Pure Gaussian probe with pointer widths sigma_a, sigma_b, pointer
// correlation corr = cov(J_A,J_B)/(sigma_a*sigma_b), and a cross chirp:
// the wavefunction
//
//   psi(J) propto exp(-J^T W J / 4 + i*beta*J_A*J_B),   W = Sigma_JJ^{-1},
//
// with beta = chirp/(sigma_a*sigma_b).  The chirp leaves every pointer
// marginal untouched but gives the state the J-Phi cross covariance
// (cov(J_B, Phi_A) = -beta*sigma_b^2 at corr = 0) that sequential
// reconstruction needs; a purely product-form probe makes the two-point
// solves below singular.  Momentum covariances follow from purity:
// Sigma_JPhi = -Sigma_JJ * Theta, Sigma_PhiPhi = W/4 + Theta*Sigma_JJ*Theta
// with Theta = beta * offdiag(1,1).
inline GaussianProbe gaussian_from_widths(double sigma_a, double sigma_b,
                                          double corr = 0.0, double chirp = 0.0) {
  if (!(sigma_a > 0.0) || !(sigma_b > 0.0))
    throw validation_error("pointer widths must be positive");
  if (!(std::abs(corr) < 1.0))
    throw validation_error("pointer correlation must satisfy |corr| < 1");
  Eigen::Matrix2d jj;
  jj << sigma_a * sigma_a, corr * sigma_a * sigma_b, corr * sigma_a * sigma_b,
      sigma_b * sigma_b;
  const Eigen::Matrix2d w = jj.inverse();
  Eigen::Matrix2d theta = Eigen::Matrix2d::Zero();
  theta(0, 1) = theta(1, 0) = chirp / (sigma_a * sigma_b);
  GaussianProbe p;
  p.cov.topLeftCorner<2, 2>() = jj;
  p.cov.topRightCorner<2, 2>() = -jj * theta;
  p.cov.bottomLeftCorner<2, 2>() = (-jj * theta).transpose();
  p.cov.bottomRightCorner<2, 2>() = 0.25 * w + theta * jj * theta;
  validate_probe(p);
  return p;
}

inline Cx moyal_pr(const GaussianProbe& p, double phi_a, double phi_b,
                   double j_a, double j_b) {
  Eigen::Vector4d v;
  v << phi_a, phi_b, -j_a, -j_b;
  return std::exp(Cx{-0.5 * v.dot(p.cov * v), p.mean.dot(v)});
}

// <J + j/2 | rho_pr | J - j/2> in closed form.  With covariance blocks
// P = JJ, C = J-Phi, Q = Phi-Phi and w = J - mean_J:
//
//   (2 pi)^{-1} det(P)^{-1/2} exp(-w^T P^{-1} w / 2)
//     * exp(-i (mean_Phi + C^T P^{-1} w) . j)
//     * exp(-j^T (Q - C^T P^{-1} C) j / 2).
inline Cx mixed_element(const GaussianProbe& p, double ja_pos, double jb_pos,
                        double j_a, double j_b) {
  const Eigen::Matrix2d pj = p.cov.topLeftCorner<2, 2>();
  const Eigen::Matrix2d c = p.cov.topRightCorner<2, 2>();
  const Eigen::Matrix2d q = p.cov.bottomRightCorner<2, 2>();
  const Eigen::Matrix2d pinv = pj.inverse();
  Eigen::Vector2d w{ja_pos - p.mean(0), jb_pos - p.mean(1)};
  Eigen::Vector2d j{j_a, j_b};
  const Eigen::Vector2d phase_vec =
      p.mean.tail<2>() + c.transpose() * pinv * w;
  const double amp = -0.5 * w.dot(pinv * w) -
                     0.5 * j.dot((q - c.transpose() * pinv * c) * j);
  const double norm = 1.0 / (2.0 * pi * std::sqrt(pj.determinant()));
  return norm * std::exp(Cx{amp, -phase_vec.dot(j)});
}

// ---------------------------------------------------------------------------
// Tabulated probes
// ---------------------------------------------------------------------------

// One pointer axis given as a 1-D density matrix sampled on a uniform grid:
// rho(k, l) approximates <j_min + k*h | rho_axis | j_min + l*h>.  Probes
// with correlated detectors are supported only through the Gaussian family,
// so a tabulated probe is a product of two axes.
struct GridAxis {
  double h = 0.0;
  double j_min = 0.0;
  Eigen::MatrixXcd rho;
};

struct GridProbe {
  GridAxis a, b;
};

inline void validate_axis(const GridAxis& ax, const char* name) {
  const std::string axis = std::string("axis ") + name;
  if (!(ax.h > 0.0) || !std::isfinite(ax.h))
    throw validation_error(axis + ": step must be positive and finite");
  if (ax.rho.rows() < 2 || ax.rho.rows() != ax.rho.cols())
    throw validation_error(axis + ": needs a square sample matrix of size >= 2");
  if (!ax.rho.allFinite()) throw validation_error(axis + ": non-finite samples");
  const double herm = (ax.rho - ax.rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10)
    throw validation_error(axis + ": not Hermitian, max deviation " +
                           std::to_string(herm));
  const double trace = (ax.rho.diagonal().real().sum()) * ax.h;
  if (std::abs(trace - 1.0) > 1e-6)
    throw validation_error(axis + ": trace integral " + std::to_string(trace) +
                           " deviates from 1 beyond 1e-6");
}

inline void validate_probe(const GridProbe& p) {
  validate_axis(p.a, "A");
  validate_axis(p.b, "B");
}

// Pure Gaussian axis of width sigma tabulated with step h on
// [-extent, extent]; a convenience constructor for files and tests.
inline GridAxis gaussian_grid_axis(double sigma, double h, double extent) {
  if (!(sigma > 0.0) || !(h > 0.0) || !(extent > 0.0))
    throw validation_error("axis parameters must be positive");
  const int n = 2 * static_cast<int>(std::round(extent / h)) + 1;
  GridAxis ax;
  ax.h = h;
  ax.j_min = -0.5 * (n - 1) * h;
  Eigen::VectorXd psi(n);
  for (int k = 0; k < n; ++k) {
    const double x = ax.j_min + k * h;
    psi(k) = std::exp(-x * x / (4.0 * sigma * sigma));
  }
  psi /= std::sqrt(psi.squaredNorm() * h);  // unit trace on the grid
  ax.rho = (psi * psi.transpose()).cast<Cx>();
  return ax;
}

namespace detail {

// <u | rho_axis | v> by bilinear interpolation; zero outside the table.
inline Cx axis_element(const GridAxis& ax, double u, double v) {
  const int n = static_cast<int>(ax.rho.rows());
  const double fu = (u - ax.j_min) / ax.h;
  const double fv = (v - ax.j_min) / ax.h;
  if (fu < 0.0 || fv < 0.0 || fu > n - 1 || fv > n - 1) return Cx{0.0, 0.0};
  const int ku = std::min(static_cast<int>(fu), n - 2);
  const int kv = std::min(static_cast<int>(fv), n - 2);
  const double tu = fu - ku, tv = fv - kv;
  return (1 - tu) * (1 - tv) * ax.rho(ku, kv) + tu * (1 - tv) * ax.rho(ku + 1, kv) +
         (1 - tu) * tv * ax.rho(ku, kv + 1) + tu * tv * ax.rho(ku + 1, kv + 1);
}

// One-axis transform sum_k e^{i phi J_k} <J_k + j/2 | rho | J_k - j/2> h.
inline Cx axis_transform(const GridAxis& ax, double phi, double j) {
  const int n = static_cast<int>(ax.rho.rows());
  Cx acc{0.0, 0.0};
  const double half = 0.5 * j;
  const double offset = half / ax.h;
  const long long cells = std::llround(offset);
  if (std::abs(offset - cells) < 1e-12) {
    // j/2 lands on the grid: read the corresponding skew diagonal directly.
    for (int k = 0; k < n; ++k) {
      const long long ku = k + cells, kv = k - cells;
      if (ku < 0 || kv < 0 || ku >= n || kv >= n) continue;
      const double jk = ax.j_min + k * ax.h;
      acc += std::exp(iu * (phi * jk)) * ax.rho(ku, kv);
    }
  } else {
    for (int k = 0; k < n; ++k) {
      const double jk = ax.j_min + k * ax.h;
      acc += std::exp(iu * (phi * jk)) * axis_element(ax, jk + half, jk - half);
    }
  }
  return acc * ax.h;
}

}  // namespace detail

inline Cx moyal_pr(const GridProbe& p, double phi_a, double phi_b, double j_a,
                   double j_b) {
  return detail::axis_transform(p.a, phi_a, j_a) *
         detail::axis_transform(p.b, phi_b, j_b);
}

inline Cx mixed_element(const GridProbe& p, double ja_pos, double jb_pos,
                        double j_a, double j_b) {
  return detail::axis_element(p.a, ja_pos + 0.5 * j_a, ja_pos - 0.5 * j_a) *
         detail::axis_element(p.b, jb_pos + 0.5 * j_b, jb_pos - 0.5 * j_b);
}

// ---------------------------------------------------------------------------
// Variant dispatch
// ---------------------------------------------------------------------------

using Probe = std::variant<GaussianProbe, GridProbe>;

inline void validate_probe(const Probe& p) {
  std::visit([](const auto& q) { validate_probe(q); }, p);
}

inline Cx moyal_pr(const Probe& p, double phi_a, double phi_b, double j_a,
                   double j_b) {
  return std::visit(
      [&](const auto& q) { return moyal_pr(q, phi_a, phi_b, j_a, j_b); }, p);
}

inline Cx mixed_element(const Probe& p, double ja_pos, double jb_pos, double j_a,
                        double j_b) {
  return std::visit(
      [&](const auto& q) { return mixed_element(q, ja_pos, jb_pos, j_a, j_b); },
      p);
}

// Pointer standard deviations, used to size sampling windows.
inline Eigen::Vector2d pointer_sigmas(const Probe& p) {
  if (std::holds_alternative<GaussianProbe>(p)) {
    const auto& g = std::get<GaussianProbe>(p);
    return {std::sqrt(g.cov(0, 0)), std::sqrt(g.cov(1, 1))};
  }
  const auto& g = std::get<GridProbe>(p);
  auto axis_sigma = [](const GridAxis& ax) {
    double m1 = 0.0, m2 = 0.0;
    for (int k = 0; k < ax.rho.rows(); ++k) {
      const double x = ax.j_min + k * ax.h;
      const double w = ax.rho(k, k).real() * ax.h;
      m1 += w * x;
      m2 += w * x * x;
    }
    return std::sqrt(std::max(m2 - m1 * m1, 0.0));
  };
  return {axis_sigma(g.a), axis_sigma(g.b)};
}

// Pointer means, used to center sampling windows.
inline Eigen::Vector2d pointer_means(const Probe& p) {
  if (std::holds_alternative<GaussianProbe>(p)) {
    const auto& g = std::get<GaussianProbe>(p);
    return {g.mean(0), g.mean(1)};
  }
  const auto& g = std::get<GridProbe>(p);
  auto axis_mean = [](const GridAxis& ax) {
    double m1 = 0.0;
    for (int k = 0; k < ax.rho.rows(); ++k)
      m1 += ax.rho(k, k).real() * ax.h * (ax.j_min + k * ax.h);
    return m1;
  };
  return {axis_mean(g.a), axis_mean(g.b)};
}

}  // namespace seqtomo
