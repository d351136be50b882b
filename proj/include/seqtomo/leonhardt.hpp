// Copyright 2026 seqtomo authors
// SPDX-License-Identifier: Apache-2.0
//
// Cross-validation against the discrete characteristic function
//
//   W~(nu, n) = sum_m exp[-(4*pi*i/d) * n * (m + f/2 - nu)]
//               * <m| rho |reduce(m - 2*nu)>,
//
// where nu is a half-integer, n is real, f = 1 for even d and 0 for odd d
// (the fermionic label shift), and reduce() wraps the ket label back into
// the m-grid cyclically -- with no sign, unlike the translation operator.
//
// Writing phi = -4*pi*n/d and mu = 2*nu, the same sum reads
// W~(phi; mu) = sum_m e^{i*phi*(m + f/2 - mu/2)} rho[m, reduce(m - mu)],
// and splitting the cyclic sum at the wrap point gives the exact algebraic
// bridge to the domain-restricted Moyal function (dimensionless phases,
// i.e. a0 = 1 in this comparison):
//
//   0 < mu < d:  W~(phi; mu) = e^{i*phi*f/2} M(phi; mu)
//                              + e^{i*phi*(f-d)/2} M(phi; mu-d)
//   mu = 0:      W~(phi; 0)  = e^{i*phi*f/2} M(phi; 0)
//
// together with the periodicity W~(phi; mu+d) = e^{-i*phi*d/2} W~(phi; mu).
// At the discrete phases phi = -4*pi*n/d with integer n both exponentials
// collapse to the common factor e^{-2*pi*i*n*f/d}.

#pragma once

#include "seqtomo/moyal.hpp"

namespace seqtomo {

// 1 for even d, 0 for odd d.
inline int fermion_parity(const HilbertSpec& spec) {
  spec.validate();
  return 1 - (spec.d % 2);
}

// W~ as a function of the continuous phase, with mu = 2*nu any integer;
// values of mu outside [0, d) only pick up the periodicity phase.
inline Cx leonhardt_char_phase(const DensityMatrix& dm, int mu, double phi) {
  validate_density(dm);
  const HilbertSpec& s = dm.spec;
  const int f = fermion_parity(s);
  Cx acc{0.0, 0.0};
  for (int i = 0; i < s.d; ++i) {
    const int two_m = s.two_m(i);
    const int col = s.index_of_two_m(reduce_into_grid(s, two_m - 2 * mu).two_f);
    acc += std::exp(iu * (phi * 0.5 * (two_m + f - mu))) * dm.rho(i, col);
  }
  return acc;
}

// W~(nu, n) in the original labels: nu a half-integer, n any real.
inline Cx leonhardt_char(const DensityMatrix& dm, double nu, double n) {
  const long two_nu = std::lround(2.0 * nu);
  if (std::abs(2.0 * nu - two_nu) > 1e-9)
    throw domain_error("2*nu = " + std::to_string(2.0 * nu) +
                       " is not an integer");
  return leonhardt_char_phase(dm, static_cast<int>(two_nu),
                              -4.0 * pi * n / dm.spec.d);
}

namespace detail {

// Moyal value at dimensionless phase, with empty diagonals (|mu| >= d)
// contributing zero -- the convention that closes the discrete relation at
// 2*nu = 0.
inline Cx moyal_dimensionless(const DensityMatrix& dm, double phi, int mu) {
  if (std::abs(mu) >= dm.spec.d) return Cx{0.0, 0.0};
  return moyal_sys(dm, phi / dm.spec.a0(), mu);
}

}  // namespace detail

// Residual of the algebraic bridge at one (mu, phi).  mu = 0 checks the
// single coinciding term; 0 < mu < d checks the two-term combination.
inline double relation_check(const DensityMatrix& dm, int mu, double phi) {
  validate_density(dm);
  const HilbertSpec& s = dm.spec;
  if (mu < 0 || mu >= s.d)
    throw domain_error("relation holds for mu in [0, d); got " +
                       std::to_string(mu));
  const double f = fermion_parity(s);
  Cx rhs = std::exp(iu * (phi * 0.5 * f)) * detail::moyal_dimensionless(dm, phi, mu);
  if (mu > 0)
    rhs += std::exp(iu * (phi * 0.5 * (f - s.d))) *
           detail::moyal_dimensionless(dm, phi, mu - s.d);
  return std::abs(leonhardt_char_phase(dm, mu, phi) - rhs);
}

// Residual of the discrete-phase form W~(nu, n) =
// e^{-2*pi*i*n*f/d} [M(-4*pi*n/d; 2*nu) + M(-4*pi*n/d; 2*nu - d)].
inline double discrete_relation_check(const DensityMatrix& dm, double nu,
                                      long n) {
  validate_density(dm);
  const HilbertSpec& s = dm.spec;
  const long two_nu = std::lround(2.0 * nu);
  if (std::abs(2.0 * nu - two_nu) > 1e-9)
    throw domain_error("2*nu = " + std::to_string(2.0 * nu) +
                       " is not an integer");
  const double phi = -4.0 * pi * n / s.d;
  const Cx rhs = std::exp(iu * (-2.0 * pi * n * fermion_parity(s) / s.d)) *
                 (detail::moyal_dimensionless(dm, phi, static_cast<int>(two_nu)) +
                  detail::moyal_dimensionless(dm, phi,
                                              static_cast<int>(two_nu) - s.d));
  return std::abs(leonhardt_char(dm, nu, static_cast<double>(n)) - rhs);
}

}  // namespace seqtomo
