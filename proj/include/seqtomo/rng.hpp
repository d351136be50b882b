// Copyright 2026 seqtomo authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic, platform-independent random streams.
//
// Sampled outputs must be byte-identical across runs, platforms and thread
// counts.  The standard distributions (std::normal_distribution etc.) are
// implementation-defined, so this header maps mt19937_64 raw bits to doubles
// by hand: uniforms via (x >> 11) * 2^-53 and normals via Box-Muller.
// Work is split into chunks; chunk k of a run seeded with s draws from an
// independent stream keyed by (s, k), so any thread may process any chunk
// and the output depends only on (s, k).

#pragma once

#include <cstdint>
#include <random>

#include "seqtomo/core.hpp"

namespace seqtomo {

// One step of the splitmix64 mixer; used to spread (seed, stream) pairs into
// well-separated mt19937_64 seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed;
    (void)splitmix64(s);
    s ^= 0x6A09E667F3BCC909ULL * (stream + 1);
    gen_.seed(splitmix64(s));
  }

  std::uint64_t raw() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; used where log() must not see zero.
  double uniform_pos() {
    return (static_cast<double>(raw() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller, one spare cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * pi * u2);
  }

  // Index into a discrete distribution given by (unnormalized) weights.
  template <typename Vec>
  int pick(const Vec& weights) {
    double total = 0.0;
    for (int i = 0; i < static_cast<int>(weights.size()); ++i) total += weights[i];
    double u = uniform() * total;
    for (int i = 0; i < static_cast<int>(weights.size()); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return static_cast<int>(weights.size()) - 1;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Ginibre-sampled random density matrix of the given rank: rho = G G^dag
// normalized to unit trace, G a d x rank matrix of standard complex normals.
inline DensityMatrix random_density(const HilbertSpec& spec, int rank,
                                    std::uint64_t seed) {
  spec.validate();
  if (rank < 1 || rank > spec.d)
    throw validation_error("rank must lie in [1, d], got " + std::to_string(rank));
  RngStream rng(seed, 0);
  Eigen::MatrixXcd g(spec.d, rank);
  for (int i = 0; i < spec.d; ++i)
    for (int j = 0; j < rank; ++j) g(i, j) = Cx{rng.normal(), rng.normal()};
  Eigen::MatrixXcd rho = g * g.adjoint();
  rho /= rho.trace().real();
  return {spec, rho};
}

}  // namespace seqtomo
