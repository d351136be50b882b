// Copyright 2026 seqtomo authors
// SPDX-License-Identifier: Apache-2.0
//
// System Moyal function: the mixed characteristic transform of the state
// along one skew diagonal of the density matrix,
//
//   M(phi; mu) = sum_Mbar exp(i*phi*Mbar*a0) * rho[Mbar + mu/2, Mbar - mu/2],
//
// where mu = m - m' is an integer in [-(d-1), d-1] and the mean label Mbar
// runs over {-S + |mu|/2, ..., S - |mu|/2} in unit steps.  Fixing mu and
// sampling phi on the conjugate grid of the shortened diagonal,
//
//   phi(Mbar_A) = 2*pi*Mbar_A / (a0 * (d - |mu|)),   Mbar_A on a
//                                                    (d-|mu|)-point grid,
//
// makes the map Moyal <-> diagonal an invertible DFT:
//
//   rho[Mbar + mu/2, Mbar - mu/2]
//     = (1/(d-|mu|)) * sum_{Mbar_A} exp(-2*pi*i*Mbar_A*Mbar/(d-|mu|))
//                      * M(phi(Mbar_A); mu).
//
// All half-integer labels are stored doubled, as in core.hpp.

#pragma once

#include <map>
#include <vector>

#include "seqtomo/core.hpp"

namespace seqtomo {

// Periodized sinc that weights each skew diagonal in the continuous-phi
// characteristic function: g(x) = sin(d*b0*x/2) / (d*sin(b0*x/2)), with the
// removable singularities at x = k*d*a0 evaluated through their limit
// cos(d*b0*x/2)/cos(b0*x/2) = (-1)^(k*(d-1)).
inline double dirichlet_factor(const HilbertSpec& spec, double x) {
  const double half = 0.5 * spec.b0() * x;
  const double s = std::sin(half);
  if (std::abs(s) < 1e-9) return std::cos(spec.d * half) / std::cos(half);
  return std::sin(spec.d * half) / (spec.d * s);
}

// Doubled mean labels 2*Mbar for the diagonal at offset mu: a grid of
// d - |mu| values with parity (d - 1 + mu) mod 2.
inline std::vector<int> diagonal_grid(const HilbertSpec& spec, int mu) {
  const int width = spec.d - std::abs(mu);
  if (width <= 0)
    throw domain_error("diagonal offset " + std::to_string(mu) +
                       " is outside dimension " + std::to_string(spec.d));
  std::vector<int> out(width);
  for (int k = 0; k < width; ++k) out[k] = -(width - 1) + 2 * k;
  return out;
}

// M(phi; mu) for any real phi.
inline Cx moyal_sys(const DensityMatrix& dm, double phi, int mu) {
  const HilbertSpec& s = dm.spec;
  Cx acc{0.0, 0.0};
  for (int two_mbar : diagonal_grid(s, mu)) {
    const int row = s.index_of_two_m(two_mbar + mu);
    const int col = s.index_of_two_m(two_mbar - mu);
    acc += std::exp(iu * (phi * 0.5 * two_mbar * s.a0())) * dm.rho(row, col);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Tabulated Moyal values on the inversion lattice
// ---------------------------------------------------------------------------

// Keyed exactly by (mu, 2*Mbar_A) so lookups never compare floating-point
// frequencies; phi is derived from the key on demand.
class MoyalTable {
 public:
  using Key = std::pair<int, int>;  // (mu, doubled Mbar_A)

  explicit MoyalTable(const HilbertSpec& spec) : spec_(spec) { spec_.validate(); }

  const HilbertSpec& spec() const { return spec_; }

  double phi_of(int mu, int two_mbar_a) const {
    return pi * two_mbar_a / (spec_.a0() * (spec_.d - std::abs(mu)));
  }

  void set(int mu, int two_mbar_a, Cx value) {
    check_key(mu, two_mbar_a);
    values_[{mu, two_mbar_a}] = value;
  }

  bool has(int mu, int two_mbar_a) const {
    return values_.count({mu, two_mbar_a}) > 0;
  }

  Cx at(int mu, int two_mbar_a) const {
    auto it = values_.find({mu, two_mbar_a});
    if (it == values_.end())
      throw incomplete_table_error("no tabulated value at diagonal " +
                                   std::to_string(mu) + ", doubled mean label " +
                                   std::to_string(two_mbar_a));
    return it->second;
  }

  const std::map<Key, Cx>& entries() const { return values_; }

 private:
  void check_key(int mu, int two_mbar_a) const {
    const int width = spec_.d - std::abs(mu);
    if (width <= 0)
      throw domain_error("diagonal offset " + std::to_string(mu) +
                         " is outside dimension " + std::to_string(spec_.d));
    if (std::abs(two_mbar_a) > width - 1 || (two_mbar_a + width - 1) % 2 != 0)
      throw domain_error("doubled mean label " + std::to_string(two_mbar_a) +
                         " is not on the " + std::to_string(width) +
                         "-point conjugate grid");
  }

  HilbertSpec spec_;
  std::map<Key, Cx> values_;
};

// Tabulates the state's Moyal function on the full inversion lattice.  With
// include_negative = false only diagonals mu >= 0 are stored; the inverse
// transform then completes the lower triangle by Hermitian symmetry.
inline MoyalTable build_moyal_table(const DensityMatrix& dm,
                                    bool include_negative = true) {
  validate_density(dm);
  MoyalTable t(dm.spec);
  const int d = dm.spec.d;
  for (int mu = include_negative ? -(d - 1) : 0; mu <= d - 1; ++mu)
    for (int two_mbar_a : diagonal_grid(dm.spec, mu))
      t.set(mu, two_mbar_a, moyal_sys(dm, t.phi_of(mu, two_mbar_a), mu));
  return t;
}

// Inverse transform: one short DFT per diagonal.  Diagonals with mu < 0 are
// taken from the table when present and reconstructed as the conjugate
// transpose of the +mu result otherwise.  Throws incomplete_table_error if
// any required entry on a non-negative diagonal is missing.
inline Eigen::MatrixXcd invert_moyal(const MoyalTable& table) {
  const HilbertSpec& s = table.spec();
  const int d = s.d;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);

  auto diagonal_values = [&](int mu) {
    // One inverse DFT of length D = d - |mu|; index k pairs with the
    // doubled output label diagonal_grid[k].
    const std::vector<int> grid = diagonal_grid(s, mu);
    const int width = static_cast<int>(grid.size());
    std::vector<Cx> out(width, Cx{0.0, 0.0});
    for (int k = 0; k < width; ++k)
      for (int two_mbar_a : grid) {
        // exponent: -2*pi*i * Mbar_A * Mbar / D with doubled labels.
        const double angle = -pi * 0.5 * two_mbar_a * grid[k] / width;
        out[k] += std::exp(iu * angle) * table.at(mu, two_mbar_a) /
                  static_cast<double>(width);
      }
    return out;
  };

  for (int mu = 0; mu <= d - 1; ++mu) {
    const std::vector<int> grid = diagonal_grid(s, mu);
    const std::vector<Cx> upper = diagonal_values(mu);
    for (int k = 0; k < static_cast<int>(grid.size()); ++k) {
      const int row = s.index_of_two_m(grid[k] + mu);
      const int col = s.index_of_two_m(grid[k] - mu);
      rho(row, col) = upper[k];
    }
    if (mu == 0) continue;
    int present = 0;
    for (int two_mbar_a : grid) present += table.has(-mu, two_mbar_a) ? 1 : 0;
    if (present != 0 && present != static_cast<int>(grid.size()))
      throw incomplete_table_error("diagonal " + std::to_string(-mu) +
                                   " is only partially tabulated");
    const bool have_lower = present > 0;
    const std::vector<Cx> lower =
        have_lower ? diagonal_values(-mu) : std::vector<Cx>{};
    for (int k = 0; k < static_cast<int>(grid.size()); ++k) {
      const int row = s.index_of_two_m(grid[k] + mu);
      const int col = s.index_of_two_m(grid[k] - mu);
      rho(col, row) = have_lower ? lower[k] : std::conj(rho(row, col));
    }
  }
  return rho;
}

}  // namespace seqtomo
