// Copyright 2026 seqtomo authors
// SPDX-License-Identifier: Apache-2.0
//
// The conjugate observable pair.
//
// A = a0 * diag(m) is diagonal in the storage basis.  Its partner is
// B = b0 * F diag(m) F^dag, where F is the discrete Fourier kernel on the
// centered grid,
//
//   <m' | m~> = exp(2*pi*i*m*m'/d) / sqrt(d),
//
// i.e. column m of F is the B-eigenvector |m~> with eigenvalue b0*m.  With
// a0*b0*d = 2*pi the exponential of B steps the A-basis:
//
//   exp(i*z*a0*B) |m> = (-1)^((d-1)*r) |m - z + r*d>,   z integer,
//
// the wrap count r chosen so the label lands back on the grid.

#pragma once

#include "seqtomo/core.hpp"

namespace seqtomo {

struct ObservablePair {
  HilbertSpec spec;
  Eigen::MatrixXcd F;  // conjugate transform; column i0 is the B-eigenvector
  Eigen::MatrixXcd A;  // a0 * diag(m)
  Eigen::MatrixXcd B;  // b0 * F diag(m) F^dag
};

inline ObservablePair build_pair(const HilbertSpec& spec) {
  spec.validate();
  const int d = spec.d;
  ObservablePair p;
  p.spec = spec;
  p.F.resize(d, d);
  for (int i1 = 0; i1 < d; ++i1)
    for (int i0 = 0; i0 < d; ++i0)
      // m*m' = two_m*two_m'/4, so the phase is pi*two_m*two_m'/(2d).
      p.F(i1, i0) = std::exp(iu * (pi * spec.two_m(i0) * spec.two_m(i1) / (2.0 * d))) /
                    std::sqrt(static_cast<double>(d));
  Eigen::VectorXd halves(d);
  for (int i = 0; i < d; ++i) halves(i) = 0.5 * spec.two_m(i);
  p.A = (spec.a0() * halves).asDiagonal();
  p.B = spec.b0() * p.F * halves.asDiagonal() * p.F.adjoint();
  p.B = 0.5 * (p.B + p.B.adjoint().eval());  // scrub rounding asymmetry
  return p;
}

// exp(i*z*a0*B) computed through the eigenbasis (valid for any real z).
inline Eigen::MatrixXcd translation_operator(const ObservablePair& p, double z) {
  const int d = p.spec.d;
  Eigen::VectorXcd phases(d);
  for (int i = 0; i < d; ++i)
    phases(i) = std::exp(iu * (2.0 * pi * z * 0.5 * p.spec.two_m(i) / d));
  return p.F * phases.asDiagonal() * p.F.adjoint();
}

// Largest deviation, over the whole basis, between exp(i*z*a0*B)|m> and the
// signed wrapped basis vector it must equal for integer z.
inline double translation_check(const ObservablePair& p, int z) {
  const Eigen::MatrixXcd u = translation_operator(p, z);
  double worst = 0.0;
  for (int i = 0; i < p.spec.d; ++i) {
    const Reduced red = reduce_into_grid(p.spec, p.spec.two_m(i) - 2 * z);
    Eigen::VectorXcd expect = Eigen::VectorXcd::Zero(p.spec.d);
    expect(p.spec.index_of_two_m(red.two_f)) = wrap_sign(p.spec, red.r);
    worst = std::max(worst, (u.col(i) - expect).cwiseAbs().maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Composed qubit observable
// ---------------------------------------------------------------------------

// On n qubits the weighted sum  sum_p 2^(p-1) * sigma_z(p)  has each odd
// integer in [-(2^n - 1), 2^n - 1] exactly once as an eigenvalue: the qubit
// register *is* a d = 2^n grid in disguise.  Computational basis index b
// (bit p-1 of b = 1 means qubit p points down) has eigenvalue (2^n-1) - 2b,
// which equals the doubled grid label two_m(d-1-b); the physical observable
// A = a0*diag(m) is scale * (composed observable) with scale = a0/2.
struct ComposedQubitObservable {
  HilbertSpec spec;                   // d = 2^n
  Eigen::VectorXi doubled_eigenvalue; // per computational basis index b
  Eigen::VectorXi grid_index;         // storage index i with two_m(i) = eigenvalue
  double scale = 0.0;                 // A-eigenvalue = scale*eigenvalue + shift
  double shift = 0.0;
};

inline ComposedQubitObservable compose_qubit_a(int n_qubits, double l0 = 1.0) {
  if (n_qubits < 1 || n_qubits > 20)
    throw validation_error("qubit count must lie in [1, 20], got " +
                           std::to_string(n_qubits));
  const int d = 1 << n_qubits;
  ComposedQubitObservable out;
  out.spec = HilbertSpec{d, l0};
  out.spec.validate();
  out.doubled_eigenvalue.resize(d);
  out.grid_index.resize(d);
  for (int b = 0; b < d; ++b) {
    out.doubled_eigenvalue(b) = (d - 1) - 2 * b;
    out.grid_index(b) = out.spec.index_of_two_m(out.doubled_eigenvalue(b));
  }
  out.scale = 0.5 * out.spec.a0();
  out.shift = 0.0;
  return out;
}

}  // namespace seqtomo
