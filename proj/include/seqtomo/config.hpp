// Copyright 2026 seqtomo authors
// SPDX-License-Identifier: Apache-2.0
//
// Run descriptors.  A single structured config file fully determines a run:
//
//   {
//     "space":   {"d": 3, "l0": 1.0},
//     "state":   {"kind": "random", "rank": 2, "seed": 7}
//              | {"kind": "bloch", "n": [0.3, 0.0, 0.8]}
//              | {"kind": "file", "path": "state.json"},
//     "probe":   {"kind": "gaussian", "sigma_a": 1.0, "sigma_b": 1.0,
//                 "corr": 0.0, "chirp": 1.0, "units": "lattice"}
//              | {"kind": "grid", "path": "probe.json"},
//     "sampling":       {"n": 100000, "seed": 9, "backend": "automatic",
//                        "grid_cells": [512, 512], "pad_sigmas": 8.0},
//     "readout":        {"blur": "none"}
//                     | {"blur": "gaussian", "width": 0.1,
//                        "units": "lattice"},
//     "reconstruction": {"redundancy": true, "diagonal_only": false},
//     "bench":          {"n_values": [1000, 10000], "seeds": 10},
//     "output":         {"dir": "runs/demo"}
//   }
//
// Lengths marked "lattice" are multiples of the first-observable spacing
// a0 = l0/sqrt(d); "absolute" uses the same unit as l0 directly.  Every
// validation failure names the offending field by its dotted path, and
// unknown keys are rejected so typos cannot silently revert a field to its
// default.  The descriptor hash is taken over the canonical re-serialized
// form, so formatting and key order do not affect it.

#pragma once

#include "seqtomo/io.hpp"
#include "seqtomo/rng.hpp"

namespace seqtomo {

namespace detail {

// json accessor that carries the dotted field path into every error.
class ConfigReader {
 public:
  ConfigReader(const json& j, std::string path)
      : j_(&j), path_(std::move(path)) {
    if (!j.is_object())
      throw validation_error(label() + ": expected an object");
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  bool has(const std::string& key) const { return j_->contains(key); }

  ConfigReader child(const std::string& key) const {
    require(key);
    return ConfigReader((*j_)[key], at(key));
  }

  void require(const std::string& key) const {
    if (!has(key)) throw validation_error(at(key) + ": missing");
  }

  const json& raw(const std::string& key) const {
    require(key);
    return (*j_)[key];
  }

  int get_int(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number_integer())
      throw validation_error(at(key) + ": expected an integer");
    return v.get<int>();
  }
  int get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  double get_num(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number())
      throw validation_error(at(key) + ": expected a number");
    return v.get<double>();
  }
  double get_num(const std::string& key, double fallback) const {
    return has(key) ? get_num(key) : fallback;
  }

  std::string get_str(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string())
      throw validation_error(at(key) + ": expected a string");
    return v.get<std::string>();
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean())
      throw validation_error(at(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer() ||
        (!v.is_number_unsigned() && v.get<long long>() < 0))
      throw validation_error(at(key) + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    for (const auto& item : j_->items()) {
      bool known = false;
      for (const char* k : keys) known = known || item.key() == k;
      if (!known)
        throw validation_error(at(item.key()) + ": unknown field");
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }
  const json* j_;
  std::string path_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Descriptor pieces
// ---------------------------------------------------------------------------

enum class StateKind { random, bloch, file };
enum class ProbeKind { gaussian, grid };

struct StateSource {
  StateKind kind = StateKind::random;
  int rank = 0;  // 0 = full rank
  std::uint64_t seed = 0;
  std::array<double, 3> n{0.0, 0.0, 1.0};
  std::string path;
};

struct ProbeSource {
  ProbeKind kind = ProbeKind::gaussian;
  double sigma_a = 1.0;
  double sigma_b = 1.0;
  double corr = 0.0;
  double chirp = 0.0;
  bool lattice_units = true;
  std::string path;
};

struct SamplingPlan {
  bool present = false;
  long long n = 0;
  std::uint64_t seed = 0;
  SampleBackend backend = SampleBackend::automatic;
  GridParams grid;
};

struct ReadoutModel {
  bool blurred = false;
  double width = 0.0;
  bool lattice_units = true;
};

struct ReconstructPlan {
  bool redundancy = true;
  bool diagonal_only = false;
};

struct BenchPlan {
  bool present = false;
  std::vector<long long> n_values{1000, 10000, 100000, 1000000};
  int seeds = 10;
};

// ---------------------------------------------------------------------------
// RunDescriptor
// ---------------------------------------------------------------------------

struct RunDescriptor {
  HilbertSpec space;
  StateSource state;
  ProbeSource probe;
  SamplingPlan sampling;
  ReadoutModel readout;
  ReconstructPlan recon;
  BenchPlan bench;
  std::string out_dir;
  std::filesystem::path base_dir;  // anchor for relative paths; not hashed

  static RunDescriptor parse(const json& j);
  static RunDescriptor load(const std::filesystem::path& path) {
    RunDescriptor d = parse(detail::parse_json_file(path));
    d.base_dir = path.parent_path();
    return d;
  }

  json canonical() const;
  std::string descriptor_hash() const {
    return hash_hex(fnv1a64(canonical().dump()));
  }

  double probe_sigma_a() const {
    return probe.lattice_units ? probe.sigma_a * space.a0() : probe.sigma_a;
  }
  double probe_sigma_b() const {
    return probe.lattice_units ? probe.sigma_b * space.a0() : probe.sigma_b;
  }
  double blur_width() const {
    return readout.lattice_units ? readout.width * space.a0() : readout.width;
  }

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base_dir / fp;
  }

  DensityMatrix build_state() const {
    switch (state.kind) {
      case StateKind::random:
        return random_density(space, state.rank == 0 ? space.d : state.rank,
                              state.seed);
      case StateKind::bloch:
        return bloch_state(space, state.n[0], state.n[1], state.n[2]);
      case StateKind::file: {
        DensityMatrix dm = load_density(resolve(state.path));
        if (!(dm.spec == space))
          throw validation_error(
              "state.path: the stored state has d = " +
              std::to_string(dm.spec.d) + ", l0 = " +
              std::to_string(dm.spec.l0) + " but the descriptor declares d = " +
              std::to_string(space.d) + ", l0 = " + std::to_string(space.l0));
        return dm;
      }
    }
    throw validation_error("state.kind: unhandled value");
  }

  Probe build_probe() const {
    if (probe.kind == ProbeKind::gaussian)
      return gaussian_from_widths(probe_sigma_a(), probe_sigma_b(), probe.corr,
                                  probe.chirp);
    return Probe{load_grid_probe(resolve(probe.path))};
  }
};

inline RunDescriptor RunDescriptor::parse(const json& j) {
  RunDescriptor out;
  detail::ConfigReader root(j, "");
  root.allow_only({"space", "state", "probe", "sampling", "readout",
                   "reconstruction", "bench", "output"});

  {
    detail::ConfigReader space = root.child("space");
    space.allow_only({"d", "l0"});
    const int d = space.get_int("d");
    if (d < 2 || d > 1024)
      throw validation_error("space.d: expected an integer in [2, 1024]");
    const double l0 = space.get_num("l0", 1.0);
    if (!(l0 > 0.0) || !std::isfinite(l0))
      throw validation_error("space.l0: expected a positive finite number");
    out.space = HilbertSpec{d, l0};
  }

  {
    detail::ConfigReader state = root.child("state");
    const std::string kind = state.get_str("kind");
    if (kind == "random") {
      state.allow_only({"kind", "rank", "seed"});
      out.state.kind = StateKind::random;
      out.state.rank = state.get_int("rank", 0);
      if (out.state.rank < 0 || out.state.rank > out.space.d)
        throw validation_error("state.rank: expected 1.." +
                               std::to_string(out.space.d) +
                               " (or 0 for full rank)");
      out.state.seed = state.get_seed("seed", 0);
    } else if (kind == "bloch") {
      state.allow_only({"kind", "n"});
      out.state.kind = StateKind::bloch;
      if (out.space.d != 2)
        throw validation_error(
            "state.kind: \"bloch\" is only defined for d = 2");
      const json& n = state.raw("n");
      if (!n.is_array() || n.size() != 3 || !n[0].is_number() ||
          !n[1].is_number() || !n[2].is_number())
        throw validation_error("state.n: expected three numbers");
      for (size_t i = 0; i < 3; ++i) out.state.n[i] = n[i].get<double>();
      const double norm = std::sqrt(out.state.n[0] * out.state.n[0] +
                                    out.state.n[1] * out.state.n[1] +
                                    out.state.n[2] * out.state.n[2]);
      if (norm > 1.0 + 1e-12)
        throw validation_error("state.n: vector length " +
                               std::to_string(norm) + " exceeds 1");
    } else if (kind == "file") {
      state.allow_only({"kind", "path"});
      out.state.kind = StateKind::file;
      out.state.path = state.get_str("path");
      if (out.state.path.empty())
        throw validation_error("state.path: must not be empty");
    } else {
      throw validation_error(
          "state.kind: expected \"random\", \"bloch\" or \"file\"");
    }
  }

  {
    detail::ConfigReader probe = root.child("probe");
    const std::string kind = probe.get_str("kind");
    if (kind == "gaussian") {
      probe.allow_only({"kind", "sigma_a", "sigma_b", "corr", "chirp", "units"});
      out.probe.kind = ProbeKind::gaussian;
      out.probe.sigma_a = probe.get_num("sigma_a");
      out.probe.sigma_b = probe.get_num("sigma_b");
      for (const char* key : {"sigma_a", "sigma_b"}) {
        const double v = probe.get_num(key);
        if (!(v > 0.0) || !std::isfinite(v))
          throw validation_error(probe.at(key) +
                                 ": expected a positive finite number");
      }
      out.probe.corr = probe.get_num("corr", 0.0);
      if (!(std::abs(out.probe.corr) < 1.0))
        throw validation_error("probe.corr: expected a value in (-1, 1)");
      out.probe.chirp = probe.get_num("chirp", 0.0);
      if (!std::isfinite(out.probe.chirp))
        throw validation_error("probe.chirp: expected a finite number");
      const std::string units =
          probe.has("units") ? probe.get_str("units") : "lattice";
      if (units != "lattice" && units != "absolute")
        throw validation_error(
            "probe.units: expected \"lattice\" or \"absolute\"");
      out.probe.lattice_units = units == "lattice";
    } else if (kind == "grid") {
      probe.allow_only({"kind", "path"});
      out.probe.kind = ProbeKind::grid;
      out.probe.path = probe.get_str("path");
      if (out.probe.path.empty())
        throw validation_error("probe.path: must not be empty");
    } else {
      throw validation_error("probe.kind: expected \"gaussian\" or \"grid\"");
    }
  }

  if (root.has("sampling")) {
    detail::ConfigReader sampling = root.child("sampling");
    sampling.allow_only({"n", "seed", "backend", "grid_cells", "pad_sigmas"});
    out.sampling.present = true;
    const json& n = sampling.raw("n");
    if (!n.is_number_integer() || n.get<long long>() < 1 ||
        n.get<long long>() > 1000000000LL)
      throw validation_error("sampling.n: expected an integer in [1, 1e9]");
    out.sampling.n = n.get<long long>();
    out.sampling.seed = sampling.get_seed("seed", 0);
    if (sampling.has("backend")) {
      try {
        out.sampling.backend =
            backend_from_string(sampling.get_str("backend"));
      } catch (const validation_error&) {
        throw validation_error(
            "sampling.backend: expected \"automatic\", \"kraus\" or \"grid\"");
      }
    }
    if (sampling.has("grid_cells")) {
      const json& cells = sampling.raw("grid_cells");
      if (!cells.is_array() || cells.size() != 2 ||
          !cells[0].is_number_integer() || !cells[1].is_number_integer())
        throw validation_error("sampling.grid_cells: expected two integers");
      out.sampling.grid.cells_a = cells[0].get<int>();
      out.sampling.grid.cells_b = cells[1].get<int>();
      for (int c : {out.sampling.grid.cells_a, out.sampling.grid.cells_b})
        if (c < 16 || c > 65536)
          throw validation_error(
              "sampling.grid_cells: expected values in [16, 65536]");
    }
    out.sampling.grid.pad_sigmas = sampling.get_num("pad_sigmas", 8.0);
    if (!(out.sampling.grid.pad_sigmas >= 1.0) ||
        !std::isfinite(out.sampling.grid.pad_sigmas))
      throw validation_error("sampling.pad_sigmas: expected a number >= 1");
  }

  if (root.has("readout")) {
    detail::ConfigReader readout = root.child("readout");
    const std::string blur = readout.get_str("blur");
    if (blur == "none") {
      readout.allow_only({"blur"});
    } else if (blur == "gaussian") {
      readout.allow_only({"blur", "width", "units"});
      out.readout.blurred = true;
      out.readout.width = readout.get_num("width");
      if (!(out.readout.width > 0.0) || !std::isfinite(out.readout.width))
        throw validation_error(
            "readout.width: expected a positive finite number");
      const std::string units =
          readout.has("units") ? readout.get_str("units") : "lattice";
      if (units != "lattice" && units != "absolute")
        throw validation_error(
            "readout.units: expected \"lattice\" or \"absolute\"");
      out.readout.lattice_units = units == "lattice";
    } else {
      throw validation_error("readout.blur: expected \"none\" or \"gaussian\"");
    }
  }

  if (root.has("reconstruction")) {
    detail::ConfigReader recon = root.child("reconstruction");
    recon.allow_only({"redundancy", "diagonal_only"});
    out.recon.redundancy = recon.get_bool("redundancy", true);
    out.recon.diagonal_only = recon.get_bool("diagonal_only", false);
  }

  if (root.has("bench")) {
    detail::ConfigReader bench = root.child("bench");
    bench.allow_only({"n_values", "seeds"});
    out.bench.present = true;
    if (bench.has("n_values")) {
      const json& values = bench.raw("n_values");
      if (!values.is_array() || values.empty())
        throw validation_error("bench.n_values: expected a nonempty array");
      out.bench.n_values.clear();
      for (size_t i = 0; i < values.size(); ++i) {
        if (!values[i].is_number_integer() || values[i].get<long long>() < 10)
          throw validation_error("bench.n_values[" + std::to_string(i) +
                                 "]: expected an integer >= 10");
        out.bench.n_values.push_back(values[i].get<long long>());
      }
    }
    out.bench.seeds = bench.get_int("seeds", 10);
    if (out.bench.seeds < 1 || out.bench.seeds > 1000)
      throw validation_error("bench.seeds: expected an integer in [1, 1000]");
  }

  if (root.has("output")) {
    detail::ConfigReader output = root.child("output");
    output.allow_only({"dir"});
    out.out_dir = output.get_str("dir");
  }

  return out;
}

inline json RunDescriptor::canonical() const {
  json j;
  j["space"] = {{"d", space.d}, {"l0", space.l0}};
  switch (state.kind) {
    case StateKind::random:
      j["state"] = {{"kind", "random"}, {"rank", state.rank}, {"seed", state.seed}};
      break;
    case StateKind::bloch:
      j["state"] = {{"kind", "bloch"},
                    {"n", {state.n[0], state.n[1], state.n[2]}}};
      break;
    case StateKind::file:
      j["state"] = {{"kind", "file"}, {"path", state.path}};
      break;
  }
  if (probe.kind == ProbeKind::gaussian)
    j["probe"] = {{"kind", "gaussian"},
                  {"sigma_a", probe.sigma_a},
                  {"sigma_b", probe.sigma_b},
                  {"corr", probe.corr},
                  {"chirp", probe.chirp},
                  {"units", probe.lattice_units ? "lattice" : "absolute"}};
  else
    j["probe"] = {{"kind", "grid"}, {"path", probe.path}};
  if (sampling.present)
    j["sampling"] = {{"n", sampling.n},
                     {"seed", sampling.seed},
                     {"backend", to_string(sampling.backend)},
                     {"grid_cells",
                      {sampling.grid.cells_a, sampling.grid.cells_b}},
                     {"pad_sigmas", sampling.grid.pad_sigmas}};
  if (readout.blurred)
    j["readout"] = {{"blur", "gaussian"},
                    {"width", readout.width},
                    {"units", readout.lattice_units ? "lattice" : "absolute"}};
  else
    j["readout"] = {{"blur", "none"}};
  j["reconstruction"] = {{"redundancy", recon.redundancy},
                         {"diagonal_only", recon.diagonal_only}};
  if (bench.present) {
    j["bench"] = {{"n_values", bench.n_values}, {"seeds", bench.seeds}};
  }
  if (!out_dir.empty()) j["output"] = {{"dir", out_dir}};
  return j;
}

// Detector blur on recorded outcomes: deterministic, sequential, and keyed
// off the sampling seed through an independent stream so it never collides
// with the chunked draw streams.
inline void apply_readout_noise(OutcomeSet& o, double width) {
  if (!(width >= 0.0) || !std::isfinite(width))
    throw validation_error("blur width must be nonnegative and finite");
  if (width == 0.0) return;
  RngStream rng(o.seed ^ 0x9e3779b97f4a7c15ULL, 0);
  for (auto& s : o.samples) {
    s[0] += width * rng.normal();
    s[1] += width * rng.normal();
  }
}

}  // namespace seqtomo
