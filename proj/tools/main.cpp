// Copyright 2026 seqtomo authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: configure, simulate, reconstruct, cross-validate,
// benchmark.  One structured config file determines a run; every artifact
// lands in the output directory stamped with the descriptor hash.
//
// Exit codes: 0 success, 2 config validation error, 3 numerical abort
// (probe insensitivity, unrecoverable frequency, truncated sampling window,
// and similar).  On aborts an error.json record is left in the output
// directory.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "seqtomo/config.hpp"
#include "seqtomo/leonhardt.hpp"

namespace {

using namespace seqtomo;
namespace fs = std::filesystem;

// Where to leave error.json if a command aborts; refined as soon as the
// output directory is known.
fs::path g_error_dir = ".";

const char* error_kind(const error& e) {
  if (dynamic_cast<const validation_error*>(&e)) return "validation";
  if (dynamic_cast<const probe_insensitivity_error*>(&e))
    return "probe_insensitivity";
  if (dynamic_cast<const unrecoverable_frequency_error*>(&e))
    return "unrecoverable_frequency";
  if (dynamic_cast<const extent_error*>(&e)) return "extent";
  if (dynamic_cast<const incomplete_table_error*>(&e))
    return "incomplete_table";
  if (dynamic_cast<const domain_error*>(&e)) return "domain";
  if (dynamic_cast<const io_error*>(&e)) return "io";
  return "error";
}

struct CommonOpts {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required) {
  auto* c = cmd->add_option("--config", opts.config,
                            "run descriptor (structured text)");
  if (config_required) c->required();
  cmd->add_option("--out", opts.out, "output directory");
  cmd->add_option("--seed", opts.seed, "override the sampling seed")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--threads", opts.threads, "worker threads")
      ->check(CLI::Range(1, 256));
}

fs::path resolve_out_dir(const CommonOpts& opts, const RunDescriptor* desc) {
  fs::path dir;
  if (!opts.out.empty()) {
    dir = opts.out;
  } else if (desc != nullptr && !desc->out_dir.empty()) {
    dir = desc->resolve(desc->out_dir);
  } else if (const char* env = std::getenv("SEQTOMO_OUT_DIR");
             env != nullptr && *env != '\0') {
    dir = env;
  } else {
    dir = ".";
  }
  fs::create_directories(dir);
  g_error_dir = dir;
  return dir;
}

RunDescriptor load_descriptor(const CommonOpts& opts) {
  if (!opts.out.empty()) {
    // Make sure an abort record has somewhere to land even when the
    // descriptor itself fails to parse.
    fs::create_directories(opts.out);
    g_error_dir = opts.out;
  }
  RunDescriptor desc = RunDescriptor::load(opts.config);
  if (opts.seed_set) desc.sampling.seed = opts.seed;
  return desc;
}

OutcomeSet run_sampling(const RunDescriptor& desc, const DensityMatrix& dm,
                        const Probe& probe, long long n, std::uint64_t seed,
                        int threads) {
  OutcomeSet o = sample_outcomes(dm, probe, n, seed, desc.sampling.backend,
                                 threads, desc.sampling.grid);
  if (desc.readout.blurred) apply_readout_noise(o, desc.blur_width());
  return o;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const CommonOpts& opts) {
  RunDescriptor desc = load_descriptor(opts);
  const fs::path out = resolve_out_dir(opts, &desc);
  if (!desc.sampling.present)
    throw validation_error("sampling: block is required for simulate");
  const DensityMatrix dm = desc.build_state();
  const Probe probe = desc.build_probe();
  const OutcomeSet o = run_sampling(desc, dm, probe, desc.sampling.n,
                                    desc.sampling.seed, opts.threads);
  const fs::path csv = out / "samples.csv";
  save_outcomes(csv, o, desc.descriptor_hash());
  std::cout << "wrote " << o.samples.size() << " samples (backend "
            << to_string(o.backend_used) << ") to " << csv.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

int cmd_reconstruct(const CommonOpts& opts, bool exact,
                    const std::string& samples_arg) {
  RunDescriptor desc = load_descriptor(opts);
  const fs::path out = resolve_out_dir(opts, &desc);
  const DensityMatrix truth = desc.build_state();
  const Probe probe = desc.build_probe();

  const auto z0 = desc.readout.blurred
                      ? gaussian_readout_blur(desc.blur_width())
                      : std::function<Cx(double, double)>{};

  OutcomeSet samples;  // must outlive the source view
  CharFn source;
  if (exact) {
    CharFn ideal = char_source_exact(truth, probe);
    if (desc.readout.blurred) {
      // Synthesize the blurred record, then undo it through the declared
      // transfer function; the round trip exercises the deblur machinery.
      CharFn blurred = [ideal, z0](double pa, double pb) {
        return ideal(pa, pb) * z0(pa, pb);
      };
      source = apply_readout_deblur(std::move(blurred), z0);
    } else {
      source = std::move(ideal);
    }
  } else {
    const fs::path path =
        samples_arg.empty() ? out / "samples.csv" : fs::path(samples_arg);
    samples = load_outcomes(path);
    if (!(samples.spec == desc.space))
      throw validation_error(
          "samples file " + path.string() + " belongs to d = " +
          std::to_string(samples.spec.d) +
          ", which does not match the descriptor");
    source = char_source_outcomes(samples);
    if (desc.readout.blurred)
      source = apply_readout_deblur(std::move(source), z0);
  }

  ReconstructOptions ropt;
  ropt.redundancy = desc.recon.redundancy;
  ropt.diagonal_only = desc.recon.diagonal_only;
  ropt.threads = opts.threads;
  const ReconstructionResult r = reconstruct(desc.space, probe, source, ropt);

  const double fid = fidelity(r.rho, truth);
  const double dist = trace_distance(r.rho, truth);
  const double raw_err = (r.rho_raw - truth.rho).cwiseAbs().maxCoeff();
  save_reconstruction(out / "reconstruction.json",
                      out / "reconstruction_summary.csv", r,
                      desc.descriptor_hash(),
                      json{{"fidelity_vs_truth", fid},
                           {"trace_distance_vs_truth", dist},
                           {"max_abs_error_raw", raw_err}});
  std::cout << "mode=" << (exact ? "exact" : "samples") << " fidelity=" << fid
            << " trace_distance=" << dist << " max_abs_error_raw=" << raw_err
            << " flagged=" << r.flagged_count << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// roundtrip
// ---------------------------------------------------------------------------

int cmd_roundtrip(const CommonOpts& opts) {
  double l0 = 1.0, chirp = 1.0, corr = 0.0;
  std::unique_ptr<RunDescriptor> desc;
  if (!opts.config.empty()) {
    desc = std::make_unique<RunDescriptor>(load_descriptor(opts));
    l0 = desc->space.l0;
    if (desc->probe.kind == ProbeKind::gaussian) {
      chirp = desc->probe.chirp;
      corr = desc->probe.corr;
    }
  }
  const fs::path out = resolve_out_dir(opts, desc.get());
  const std::string hash = hash_hex(fnv1a64(
      json{{"sweep", "roundtrip"}, {"l0", l0}, {"chirp", chirp}, {"corr", corr}}
          .dump()));

  std::string body = "# descriptor_hash=" + hash + "\n";
  body += "d,sigma_in_a0,rank,status,max_abs_error,flagged\n";
  double worst_ok = 0.0;
  int aborted = 0, flagged_cells = 0;
  for (int d = 2; d <= 7; ++d) {
    HilbertSpec spec{d, l0};
    for (double sigma : {0.2, 1.0, 5.0}) {
      for (int rank : {1, d}) {
        body += std::to_string(d) + "," + fmt17(sigma) + "," +
                std::to_string(rank) + ",";
        const DensityMatrix dm = random_density(
            spec, rank, 1000u + 10u * static_cast<unsigned>(d) +
                            static_cast<unsigned>(rank));
        try {
          const Probe probe = gaussian_from_widths(
              sigma * spec.a0(), sigma * spec.a0(), corr, chirp);
          ReconstructOptions ropt;
          ropt.threads = opts.threads;
          const ReconstructionResult r =
              reconstruct(spec, probe, char_source_exact(dm, probe), ropt);
          const double err = (r.rho_raw - dm.rho).cwiseAbs().maxCoeff();
          body += "ok," + fmt17(err) + "," + std::to_string(r.flagged_count);
          if (r.flagged_count == 0)
            worst_ok = std::max(worst_ok, err);
          else
            ++flagged_cells;
        } catch (const error& e) {
          body += std::string("abort:") + error_kind(e) + ",nan,0";
          ++aborted;
        }
        body += '\n';
      }
    }
  }
  seqtomo::detail::write_file(out / "roundtrip.csv", body);
  std::cout << "roundtrip: worst clean-cell error " << worst_ok << ", "
            << flagged_cells << " flagged cells, " << aborted
            << " aborted cells; wrote " << (out / "roundtrip.csv").string()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// compare-leonhardt
// ---------------------------------------------------------------------------

int cmd_compare_leonhardt(const CommonOpts& opts) {
  const fs::path out = resolve_out_dir(opts, nullptr);
  const std::uint64_t base_seed = opts.seed_set ? opts.seed : 500u;
  const std::string hash = hash_hex(fnv1a64(
      json{{"sweep", "leonhardt"}, {"seed", base_seed}}.dump()));

  std::string body = "# descriptor_hash=" + hash + "\n";
  body += "d,mu,phi,residual\n";
  double worst = 0.0;
  for (int d = 2; d <= 9; ++d) {
    HilbertSpec spec{d, 1.0};
    RngStream phases(base_seed, static_cast<std::uint64_t>(d));
    for (unsigned state = 0; state < 20; ++state) {
      const DensityMatrix dm = random_density(
          spec, 1 + static_cast<int>(state) % d,
          base_seed + 100u * static_cast<unsigned>(d) + state);
      for (int mu = 0; mu < d; ++mu)
        for (int rep = 0; rep < 5; ++rep) {
          const double phi = 12.0 * (phases.uniform() - 0.5);
          const double res = relation_check(dm, mu, phi);
          worst = std::max(worst, res);
          body += std::to_string(d) + "," + std::to_string(mu) + "," +
                  fmt17(phi) + "," + fmt17(res) + "\n";
        }
      for (int two_nu = 0; two_nu < d; ++two_nu)
        for (long n = -2; n <= 2; ++n) {
          const double res = discrete_relation_check(dm, 0.5 * two_nu, n);
          worst = std::max(worst, res);
          body += std::to_string(d) + "," + std::to_string(two_nu) + "," +
                  fmt17(-4.0 * pi * static_cast<double>(n) / d) + "," +
                  fmt17(res) + "\n";
        }
    }
  }
  seqtomo::detail::write_file(out / "leonhardt_residuals.csv", body);
  std::cout << "max residual " << worst << "; wrote "
            << (out / "leonhardt_residuals.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

int cmd_bench(const CommonOpts& opts) {
  RunDescriptor desc = load_descriptor(opts);
  const fs::path out = resolve_out_dir(opts, &desc);
  if (!desc.sampling.present)
    throw validation_error("sampling: block is required for bench");
  const DensityMatrix truth = desc.build_state();
  const Probe probe = desc.build_probe();
  const auto z0 = desc.readout.blurred
                      ? gaussian_readout_blur(desc.blur_width())
                      : std::function<Cx(double, double)>{};

  std::vector<std::pair<long long, double>> rows;
  for (long long n : desc.bench.n_values) {
    std::vector<double> errors;
    for (int s = 0; s < desc.bench.seeds; ++s) {
      const OutcomeSet o =
          run_sampling(desc, truth, probe, n,
                       desc.sampling.seed + static_cast<std::uint64_t>(s),
                       opts.threads);
      CharFn source = char_source_outcomes(o);
      if (desc.readout.blurred)
        source = apply_readout_deblur(std::move(source), z0);
      ReconstructOptions ropt;
      ropt.redundancy = desc.recon.redundancy;
      ropt.threads = opts.threads;
      const ReconstructionResult r =
          reconstruct(desc.space, probe, source, ropt);
      errors.push_back(trace_distance(r.rho, truth));
    }
    std::sort(errors.begin(), errors.end());
    const size_t m = errors.size();
    const double median = m % 2 == 1
                              ? errors[m / 2]
                              : 0.5 * (errors[m / 2 - 1] + errors[m / 2]);
    rows.emplace_back(n, median);
    std::cout << "n=" << n << " median_trace_distance=" << median << "\n";
  }

  // Least-squares slope of log(error) against log(n).
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [n, med] : rows) {
    const double x = std::log(static_cast<double>(n));
    const double y = std::log(med);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(rows.size());
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);

  std::string body = "# descriptor_hash=" + desc.descriptor_hash() + "\n";
  body += "n,median_trace_distance,fitted_slope\n";
  for (const auto& [n, med] : rows)
    body += std::to_string(n) + "," + fmt17(med) + "," + fmt17(slope) + "\n";
  seqtomo::detail::write_file(out / "bench.csv", body);
  std::cout << "fitted slope " << slope << "; wrote "
            << (out / "bench.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequential two-observable tomography toolkit"};
  app.require_subcommand(1);

  CommonOpts sim_opts, rec_opts, rt_opts, leo_opts, bench_opts;
  bool exact = false;
  std::string samples_arg;

  CLI::App* sim = app.add_subcommand("simulate", "draw outcome samples");
  add_common(sim, sim_opts, true);

  CLI::App* rec =
      app.add_subcommand("reconstruct", "recover the state from outcomes");
  add_common(rec, rec_opts, true);
  rec->add_flag("--exact", exact,
                "use the closed-form characteristic function instead of "
                "samples");
  rec->add_option("--samples", samples_arg,
                  "samples CSV (default: <out>/samples.csv)");

  CLI::App* rt = app.add_subcommand(
      "roundtrip", "exact-pipeline identity sweep over (d, width, rank)");
  add_common(rt, rt_opts, false);

  CLI::App* leo = app.add_subcommand(
      "compare-leonhardt",
      "residuals of the discrete characteristic-function bridge");
  add_common(leo, leo_opts, false);

  CLI::App* bench = app.add_subcommand(
      "bench", "Monte Carlo convergence of the sampled reconstruction");
  add_common(bench, bench_opts, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(sim)) return cmd_simulate(sim_opts);
    if (app.got_subcommand(rec))
      return cmd_reconstruct(rec_opts, exact, samples_arg);
    if (app.got_subcommand(rt)) return cmd_roundtrip(rt_opts);
    if (app.got_subcommand(leo)) return cmd_compare_leonhardt(leo_opts);
    if (app.got_subcommand(bench)) return cmd_bench(bench_opts);
  } catch (const error& e) {
    const char* kind = error_kind(e);
    std::cerr << "error [" << kind << "]: " << e.what() << "\n";
    try {
      seqtomo::detail::write_file(
          g_error_dir / "error.json",
          json{{"error", kind}, {"message", e.what()}}.dump(2) + "\n");
    } catch (...) {
      // Leaving a record is best effort; the exit code is authoritative.
    }
    return dynamic_cast<const validation_error*>(&e) != nullptr ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
