// Copyright 2026 seqtomo authors
// SPDX-License-Identifier: Apache-2.0
//
// Lattice conventions, density matrices, and shared plumbing.
//
// A d-level system (d >= 2) is described in the eigenbasis of a "position"
// observable  A = a0 * diag(m)  with  m in {-S, -S+1, ..., S},  S = (d-1)/2.
// For even d the labels m are half-odd integers, so everywhere below the
// *doubled* label 2m (always an integer, parity d-1 mod 2) is what gets
// stored and passed around.  Storage index i in [0, d) maps to
// 2m = 2i - (d-1).
//
// The conjugate "momentum" observable has step b0, tied to a0 by the
// closure constraint  a0 * b0 * d = 2*pi.  A single length scale l0 fixes
// both:  a0 = l0/sqrt(d),  b0 = 2*pi/(l0*sqrt(d)).

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace seqtomo {

using Cx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;
inline constexpr Cx iu{0.0, 1.0};

// ---------------------------------------------------------------------------
// Tolerances (shared by validation, inversion and the test suite)
// ---------------------------------------------------------------------------

namespace tol {
inline constexpr double hermitian = 1e-12;       // max |rho - rho^dag| element
inline constexpr double trace = 1e-12;           // |tr(rho) - 1|
inline constexpr double psd = -1e-10;            // smallest admissible eigenvalue
inline constexpr double closure = 1e-14;         // |a0*b0*d - 2*pi|
inline constexpr double probe_insensitive = 1e-12;  // |Mpr| below which a
                                                    // division is refused
inline constexpr double unrecoverable_frequency = 1e-9;  // |z0| cutoff for
                                                         // readout deblurring
inline constexpr double condition_flag = 1e8;    // 2x2 solves above this
                                                 // condition number get flagged
inline constexpr double grid_mass_deficit = 1e-6;  // sampling table must keep
                                                   // all but this much mass
}  // namespace tol

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

// Base class for everything thrown on purpose.  Two broad families:
// validation_error covers malformed *inputs* (bad matrices, bad covariances,
// bad configuration) and maps to CLI exit code 2; the remaining subclasses
// signal numerical conditions detected mid-computation and map to exit 3.
class error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class validation_error : public error {
  using error::error;
};

// Out-of-domain request (|mu| > d-1, off-grid frequency, bad index).
class domain_error : public error {
  using error::error;
};

// A denominator |Mpr| < tol::probe_insensitive: the probe carries no
// information at the requested frequency.
class probe_insensitivity_error : public error {
  using error::error;
};

// |z0(phi)| <= tol::unrecoverable_frequency during readout deblurring.
class unrecoverable_frequency_error : public error {
  using error::error;
};

// Sampling table lost more than tol::grid_mass_deficit of probability mass.
class extent_error : public error {
  using error::error;
};

// A tabulated-characteristic-function inversion is missing required entries.
class incomplete_table_error : public error {
  using error::error;
};

// File could not be read/parsed/written.
class io_error : public error {
  using error::error;
};

// ---------------------------------------------------------------------------
// HilbertSpec: dimension + length scale, and the doubled-label grid
// ---------------------------------------------------------------------------

struct HilbertSpec {
  int d = 2;
  double l0 = 1.0;

  double a0() const { return l0 / std::sqrt(static_cast<double>(d)); }
  double b0() const { return 2.0 * pi / (l0 * std::sqrt(static_cast<double>(d))); }

  // Doubled label 2m for storage index i in [0, d).
  int two_m(int i) const { return 2 * i - (d - 1); }

  // Inverse of two_m; throws on labels outside the grid or of wrong parity.
  int index_of_two_m(int t) const {
    if ((t + d - 1) % 2 != 0 || t < -(d - 1) || t > d - 1)
      throw domain_error("doubled label " + std::to_string(t) +
                         " is not on the grid of dimension " + std::to_string(d));
    return (t + d - 1) / 2;
  }

  void validate() const {
    if (d < 2) throw validation_error("dimension must be >= 2, got " + std::to_string(d));
    if (!(l0 > 0.0) || !std::isfinite(l0))
      throw validation_error("length scale l0 must be positive and finite");
    if (std::abs(a0() * b0() * d - 2.0 * pi) > tol::closure)
      throw validation_error("step closure a0*b0*d = 2*pi violated");
  }

  bool operator==(const HilbertSpec& o) const { return d == o.d && l0 == o.l0; }
};

// Floor division that is exact for negative numerators.
inline int floor_div(int a, int b) {
  int q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

// Result of pulling an off-grid doubled label back into [-(d-1), d-1] by
// adding r*d to the (undoubled) label.  A displaced basis vector picks up the
// sign (-1)^((d-1)*r) when it wraps, so the wrap count r is reported too.
struct Reduced {
  int two_f = 0;  // doubled in-grid label
  int r = 0;      // number of +d shifts applied
};

inline Reduced reduce_into_grid(const HilbertSpec& s, int two_value) {
  // two_f = two_value + 2*r*d must satisfy two_f <= d-1, i.e.
  // r <= (d-1-two_value)/(2d); the window width 2d-2 < 2d makes r unique.
  Reduced out;
  out.r = floor_div(s.d - 1 - two_value, 2 * s.d);
  out.two_f = two_value + 2 * out.r * s.d;
  return out;
}

// Sign picked up by a displaced basis vector that wrapped r times.
inline double wrap_sign(const HilbertSpec& s, int r) {
  return ((s.d - 1) * r) % 2 == 0 ? 1.0 : -1.0;
}

// Parity sign carried by the second addend of the two-point lattice relation
// (the value of the periodized sinc at argument d*a0).
inline double parity_sign(int d) { return (d - 1) % 2 == 0 ? 1.0 : -1.0; }

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

struct DensityMatrix {
  HilbertSpec spec;
  Eigen::MatrixXcd rho;
};

// Throws validation_error unless rho is d x d, Hermitian within
// tol::hermitian, unit trace within tol::trace and has no eigenvalue below
// tol::psd.
inline void validate_density(const DensityMatrix& dm) {
  dm.spec.validate();
  const int d = dm.spec.d;
  if (dm.rho.rows() != d || dm.rho.cols() != d)
    throw validation_error("density matrix shape " + std::to_string(dm.rho.rows()) +
                           "x" + std::to_string(dm.rho.cols()) +
                           " does not match dimension " + std::to_string(d));
  const double herm = (dm.rho - dm.rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol::hermitian)
    throw validation_error("density matrix is not Hermitian: max deviation " +
                           std::to_string(herm));
  const double tr_err = std::abs(dm.rho.trace() - Cx{1.0, 0.0});
  if (tr_err > tol::trace)
    throw validation_error("density matrix trace deviates from 1 by " +
                           std::to_string(tr_err));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      (0.5 * (dm.rho + dm.rho.adjoint())).eval(), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  if (lo < tol::psd)
    throw validation_error("density matrix has eigenvalue " + std::to_string(lo) +
                           " below the positivity tolerance");
}

inline DensityMatrix make_density(const HilbertSpec& spec, Eigen::MatrixXcd rho) {
  DensityMatrix dm{spec, std::move(rho)};
  validate_density(dm);
  return dm;
}

inline DensityMatrix maximally_mixed(const HilbertSpec& spec) {
  spec.validate();
  return {spec, Eigen::MatrixXcd::Identity(spec.d, spec.d) / spec.d};
}

// Projector onto the grid state with doubled label 2m = two_m.
inline DensityMatrix basis_state(const HilbertSpec& spec, int two_m) {
  spec.validate();
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(spec.d, spec.d);
  rho(spec.index_of_two_m(two_m), spec.index_of_two_m(two_m)) = 1.0;
  return {spec, rho};
}

// Qubit state (I + n . sigma)/2; requires |n| <= 1 (up to rounding).
inline DensityMatrix bloch_state(const HilbertSpec& spec, double nx, double ny,
                                 double nz) {
  spec.validate();
  if (spec.d != 2) throw validation_error("Bloch vectors describe d = 2 only");
  const double n = std::sqrt(nx * nx + ny * ny + nz * nz);
  if (n > 1.0 + 1e-12)
    throw validation_error("Bloch vector has length " + std::to_string(n) + " > 1");
  Eigen::MatrixXcd rho(2, 2);
  rho << 0.5 * (1.0 + nz), 0.5 * Cx{nx, -ny}, 0.5 * Cx{nx, ny}, 0.5 * (1.0 - nz);
  return {spec, rho};
}

// ---------------------------------------------------------------------------
// Parallel helper
// ---------------------------------------------------------------------------

// Statically partitioned parallel loop: body(i) for i in [0, n).  Each index
// is processed exactly once by exactly one thread, so results written to
// preallocated slot i are independent of the thread count.
template <typename Body>
void parallel_for(int n, int threads, Body&& body) {
  if (n <= 0) return;
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < n; i += threads) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace seqtomo
