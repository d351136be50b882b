// Copyright 2026 seqtomo authors
// SPDX-License-Identifier: Apache-2.0
//
// File formats.  Everything numerical is written with 17 significant
// digits, which round-trips IEEE doubles exactly:
//
//   state JSON        {"d", "l0", "entries": [[re, im], ...]}  (row-major)
//   outcomes CSV      header "J_A,J_B", one sample per line; companion
//                     <stem>.meta.json records d, l0, n, seed, backend and
//                     the run descriptor hash
//   transform CSV     "mu,mbarA_doubled,phiA,re,im" rows, key-sorted
//   tabulated probe   {"axes": [{"h", "j_min", "n_points", "entries"}, ...]}
//   reconstruction    JSON with rho_raw / rho_projected in the state
//                     format, a diagnostics array, and a metrics object;
//                     plus a one-row-per-solve summary CSV
//
// Non-sample CSVs open with a "# descriptor_hash=..." comment line so every
// artifact can be traced to the run that produced it.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "seqtomo/forward.hpp"
#include "seqtomo/reconstruct.hpp"

namespace seqtomo {

using json = nlohmann::json;

// 17 significant digits: enough to reproduce the exact double on load.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Run provenance
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Low-level helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string() + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw io_error("write to " + path.string() + " failed");
}

inline json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw io_error(path.string() + " is not valid structured text");
  return j;
}

// Complex matrix <-> row-major [[re, im], ...] array.
inline json matrix_to_entries(const Eigen::MatrixXcd& m) {
  json entries = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int k = 0; k < m.cols(); ++k)
      entries.push_back({m(i, k).real(), m(i, k).imag()});
  return entries;
}

inline Eigen::MatrixXcd entries_to_matrix(const json& entries, int rows,
                                          int cols, const std::string& where) {
  if (!entries.is_array() ||
      entries.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols))
    throw validation_error(where + ": expected " +
                           std::to_string(rows * cols) + " [re, im] pairs");
  Eigen::MatrixXcd m(rows, cols);
  size_t idx = 0;
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k, ++idx) {
      const json& e = entries[idx];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() ||
          !e[1].is_number())
        throw validation_error(where + "[" + std::to_string(idx) +
                               "]: expected a [re, im] pair");
      m(i, k) = Cx{e[0].get<double>(), e[1].get<double>()};
    }
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

inline json density_to_json(const DensityMatrix& dm) {
  return json{{"d", dm.spec.d},
              {"l0", dm.spec.l0},
              {"entries", detail::matrix_to_entries(dm.rho)}};
}

inline DensityMatrix density_from_json(const json& j,
                                       const std::string& where = "state") {
  if (!j.is_object()) throw validation_error(where + ": expected an object");
  if (!j.contains("d") || !j["d"].is_number_integer())
    throw validation_error(where + ".d: expected an integer");
  if (!j.contains("l0") || !j["l0"].is_number())
    throw validation_error(where + ".l0: expected a number");
  if (!j.contains("entries"))
    throw validation_error(where + ".entries: missing");
  HilbertSpec spec{j["d"].get<int>(), j["l0"].get<double>()};
  spec.validate();
  const Eigen::MatrixXcd m = detail::entries_to_matrix(
      j["entries"], spec.d, spec.d, where + ".entries");
  return make_density(spec, m);
}

inline void save_density(const std::filesystem::path& path,
                         const DensityMatrix& dm) {
  validate_density(dm);
  detail::write_file(path, density_to_json(dm).dump(2) + "\n");
}

inline DensityMatrix load_density(const std::filesystem::path& path) {
  return density_from_json(detail::parse_json_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Outcome sets: CSV samples plus a JSON sidecar
// ---------------------------------------------------------------------------

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension();
  p += ".meta.json";
  return p;
}

inline void save_outcomes(const std::filesystem::path& csv_path,
                          const OutcomeSet& o,
                          const std::string& descriptor_hash) {
  std::string body;
  body.reserve(o.samples.size() * 50 + 16);
  body += "J_A,J_B\n";
  for (const auto& s : o.samples) {
    body += fmt17(s[0]);
    body += ',';
    body += fmt17(s[1]);
    body += '\n';
  }
  detail::write_file(csv_path, body);
  const json meta{{"d", o.spec.d},
                  {"l0", o.spec.l0},
                  {"n", o.samples.size()},
                  {"seed", o.seed},
                  {"backend", to_string(o.backend_used)},
                  {"descriptor_hash", descriptor_hash}};
  detail::write_file(sidecar_path(csv_path), meta.dump(2) + "\n");
}

inline OutcomeSet load_outcomes(const std::filesystem::path& csv_path) {
  const json meta = detail::parse_json_file(sidecar_path(csv_path));
  for (const char* key : {"d", "l0", "n", "seed", "backend"})
    if (!meta.contains(key))
      throw validation_error(sidecar_path(csv_path).string() + ": missing \"" +
                             key + "\"");
  OutcomeSet o;
  o.spec = HilbertSpec{meta["d"].get<int>(), meta["l0"].get<double>()};
  o.spec.validate();
  o.seed = meta["seed"].get<std::uint64_t>();
  o.backend_used = backend_from_string(meta["backend"].get<std::string>());
  const size_t n = meta["n"].get<size_t>();

  std::istringstream in(detail::read_file(csv_path));
  std::string line;
  if (!std::getline(in, line) || line != "J_A,J_B")
    throw io_error(csv_path.string() + ": expected header \"J_A,J_B\"");
  o.samples.reserve(n);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw io_error(csv_path.string() + " line " +
                     std::to_string(o.samples.size() + 2) +
                     ": expected two comma-separated values");
    char* end = nullptr;
    const double a = std::strtod(line.c_str(), &end);
    const double b = std::strtod(line.c_str() + comma + 1, &end);
    if (!std::isfinite(a) || !std::isfinite(b))
      throw io_error(csv_path.string() + " line " +
                     std::to_string(o.samples.size() + 2) +
                     ": non-finite sample");
    o.samples.push_back({a, b});
  }
  if (o.samples.size() != n)
    throw io_error(csv_path.string() + ": sidecar says " + std::to_string(n) +
                   " samples, file holds " + std::to_string(o.samples.size()));
  return o;
}

// ---------------------------------------------------------------------------
// Tabulated transform values
// ---------------------------------------------------------------------------

inline void save_moyal_table(const std::filesystem::path& path,
                             const MoyalTable& t,
                             const std::string& descriptor_hash) {
  std::string body = "# descriptor_hash=" + descriptor_hash + "\n";
  body += "mu,mbarA_doubled,phiA,re,im\n";
  for (const auto& [key, value] : t.entries()) {
    body += std::to_string(key.first);
    body += ',';
    body += std::to_string(key.second);
    body += ',';
    body += fmt17(t.phi_of(key.first, key.second));
    body += ',';
    body += fmt17(value.real());
    body += ',';
    body += fmt17(value.imag());
    body += '\n';
  }
  detail::write_file(path, body);
}

inline MoyalTable load_moyal_table(const std::filesystem::path& path,
                                   const HilbertSpec& spec) {
  std::istringstream in(detail::read_file(path));
  MoyalTable t(spec);
  std::string line;
  bool header_seen = false;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "mu,mbarA_doubled,phiA,re,im")
        throw io_error(path.string() + ": unexpected header \"" + line + "\"");
      header_seen = true;
      continue;
    }
    int mu = 0, two_mbar = 0;
    double phi = 0.0, re = 0.0, im = 0.0;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf", &mu, &two_mbar, &phi,
                    &re, &im) != 5)
      throw io_error(path.string() + " line " + std::to_string(line_no) +
                     ": expected mu,mbarA_doubled,phiA,re,im");
    t.set(mu, two_mbar, Cx{re, im});
  }
  if (!header_seen) throw io_error(path.string() + ": missing header");
  return t;
}

// ---------------------------------------------------------------------------
// Tabulated probes
// ---------------------------------------------------------------------------

inline void save_grid_probe(const std::filesystem::path& path,
                            const GridProbe& p) {
  validate_probe(Probe{p});
  json axes = json::array();
  for (const GridAxis* ax : {&p.a, &p.b})
    axes.push_back({{"h", ax->h},
                    {"j_min", ax->j_min},
                    {"n_points", ax->rho.rows()},
                    {"entries", detail::matrix_to_entries(ax->rho)}});
  detail::write_file(path, json{{"axes", axes}}.dump() + "\n");
}

inline GridProbe load_grid_probe(const std::filesystem::path& path) {
  const json j = detail::parse_json_file(path);
  if (!j.contains("axes") || !j["axes"].is_array() || j["axes"].size() != 2)
    throw validation_error(path.string() + ".axes: expected two axis objects");
  GridProbe p;
  GridAxis* targets[2] = {&p.a, &p.b};
  for (int a = 0; a < 2; ++a) {
    const json& jax = j["axes"][static_cast<size_t>(a)];
    const std::string where =
        path.string() + ".axes[" + std::to_string(a) + "]";
    for (const char* key : {"h", "j_min", "n_points", "entries"})
      if (!jax.contains(key))
        throw validation_error(where + "." + key + ": missing");
    if (!jax["n_points"].is_number_integer() ||
        jax["n_points"].get<int>() < 2)
      throw validation_error(where + ".n_points: expected an integer >= 2");
    const int n = jax["n_points"].get<int>();
    targets[a]->h = jax["h"].get<double>();
    targets[a]->j_min = jax["j_min"].get<double>();
    targets[a]->rho =
        detail::entries_to_matrix(jax["entries"], n, n, where + ".entries");
  }
  validate_probe(Probe{p});
  return p;
}

// ---------------------------------------------------------------------------
// Reconstruction results
// ---------------------------------------------------------------------------

inline json reconstruction_to_json(const ReconstructionResult& r,
                                   const std::string& descriptor_hash) {
  const HilbertSpec& spec = r.rho.spec;
  json diags = json::array();
  for (const PairDiagnostic& diag : r.diagnostics)
    diags.push_back({{"mu", diag.mu},
                     {"mbarA_doubled", diag.two_mbar_a},
                     {"phiA", diag.phi_a},
                     {"cond_direct", diag.cond_direct},
                     {"cond_mirror", diag.cond_mirror},
                     {"residual", diag.residual},
                     {"discrepancy", diag.discrepancy},
                     {"flagged", diag.flagged}});
  json metrics{{"flagged_count", r.flagged_count},
               {"hermiticity_violation", r.hermiticity_violation},
               {"max_route_discrepancy", r.max_route_discrepancy},
               {"trace_deviation", r.trace_deviation}};
  return json{{"descriptor_hash", descriptor_hash},
              {"rho_raw",
               {{"d", spec.d},
                {"l0", spec.l0},
                {"entries", detail::matrix_to_entries(r.rho_raw)}}},
              {"rho_projected", density_to_json(r.rho)},
              {"diagnostics", diags},
              {"metrics", metrics}};
}

inline void save_reconstruction(const std::filesystem::path& json_path,
                                const std::filesystem::path& csv_path,
                                const ReconstructionResult& r,
                                const std::string& descriptor_hash,
                                json extra_metrics = json::object()) {
  json doc = reconstruction_to_json(r, descriptor_hash);
  for (auto it = extra_metrics.begin(); it != extra_metrics.end(); ++it)
    doc["metrics"][it.key()] = it.value();
  detail::write_file(json_path, doc.dump(2) + "\n");

  std::string body = "# descriptor_hash=" + descriptor_hash + "\n";
  body += "mu,mbarA_doubled,phiA,cond_direct,cond_mirror,residual,"
          "discrepancy,flagged\n";
  for (const PairDiagnostic& diag : r.diagnostics) {
    body += std::to_string(diag.mu);
    body += ',';
    body += std::to_string(diag.two_mbar_a);
    body += ',';
    body += fmt17(diag.phi_a);
    body += ',';
    body += fmt17(diag.cond_direct);
    body += ',';
    body += fmt17(diag.cond_mirror);
    body += ',';
    body += fmt17(diag.residual);
    body += ',';
    body += fmt17(diag.discrepancy);
    body += ',';
    body += diag.flagged ? '1' : '0';
    body += '\n';
  }
  detail::write_file(csv_path, body);
}

}  // namespace seqtomo
