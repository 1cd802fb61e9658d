/*
 * specfact — command-line driver tying the library together.
 *
 *   simulate   draw one of the built-in test processes, write the series and
 *              a truth descriptor
 *   fit        run the partition/factor sampler on a CSV series, archive the
 *              chain, write posterior summaries
 *   baseline   rolling-window smoothed periodogram with GCV span selection
 *   evaluate   integrated squared error of an estimate against a known truth
 *   summarize  re-summarize an existing chain archive on new grids, with
 *              optional coherence functionals and frequency-band collapses
 *
 * Every command is deterministic given its inputs, flags, and seed; reruns
 * produce byte-identical files.  Progress goes to standard error, machine
 * output to files or standard output.  Exit codes: 0 success, 2 invalid
 * configuration or arguments, 1 runtime failure.
 */

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "specfact/chain_archive.hpp"
#include "specfact/config.hpp"
#include "specfact/estimator.hpp"
#include "specfact/grid_io.hpp"
#include "specfact/metrics.hpp"
#include "specfact/multiseries.hpp"
#include "specfact/rollwin.hpp"
#include "specfact/samc.hpp"
#include "specfact/simulate.hpp"
#include "specfact/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Shortest representation that parses back to the same double.
std::string fmt17(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::string fmt_short(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%g", value);
  return buffer;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory '" + dir +
                             "': " + ec.message());
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = {}) {
  std::ofstream out(path, mode);
  if (!out)
    throw std::runtime_error("cannot open '" + path.string() +
                             "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

void write_json(const fs::path& path, const json& value) {
  std::ofstream out = open_out(path);
  out << value.dump(2) << '\n';
  finish(out, path);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json value;
  try {
    in >> value;
  } catch (const json::parse_error& err) {
    throw std::invalid_argument("'" + path + "' is not valid JSON: " +
                                err.what());
  }
  return value;
}

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string piece;
  std::istringstream stream(text);
  while (std::getline(stream, piece, sep)) parts.push_back(piece);
  return parts;
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": '" + text + "' is not a number");
  }
}

// "lo:hi" in cycles/sample or "lo:hi:hz" in Hz.
specfact::Band parse_band(const std::string& text) {
  const std::vector<std::string> parts = split_on(text, ':');
  if (parts.size() != 2 && parts.size() != 3)
    throw std::invalid_argument(
        "--band expects lo:hi (cycles/sample) or lo:hi:hz, got '" + text + "'");
  specfact::Band band;
  band.lo = parse_double(parts[0], "--band lower edge");
  band.hi = parse_double(parts[1], "--band upper edge");
  band.hz = parts.size() == 3;
  if (band.hz && parts[2] != "hz")
    throw std::invalid_argument("--band unit must be 'hz', got '" + parts[2] +
                                "'");
  if (!(band.hi > band.lo))
    throw std::invalid_argument("--band needs lo < hi, got '" + text + "'");
  return band;
}

std::string band_tag(const specfact::Band& band) {
  return fmt_short(band.lo) + "-" + fmt_short(band.hi) + (band.hz ? "hz" : "");
}

// ── simulate ─────────────────────────────────────────────────────────────────

struct SimulateArgs {
  std::string process;
  int p = 12;
  std::int64_t t = 1024;
  std::uint64_t seed = 0;
  std::string output_dir;
};

void cmd_simulate(const SimulateArgs& args) {
  specfact::ProcessSpec spec;
  spec.kind = specfact::kind_from_name(args.process);
  spec.p = args.p;
  spec.t = args.t;
  spec.seed = args.seed;
  spec.validate();

  const specfact::MultiSeries series = specfact::simulate(spec);
  ensure_dir(args.output_dir);
  const fs::path dir(args.output_dir);

  specfact::save_csv(series, (dir / "series.csv").string());

  json truth = spec.to_json();
  truth["change_points"] = spec.change_points();
  write_json(dir / "truth.json", truth);

  {
    std::ofstream out = open_out(dir / "breaks.txt");
    for (const std::int64_t b : spec.change_points()) out << b << '\n';
    finish(out, dir / "breaks.txt");
  }

  std::cerr << "simulate: wrote " << spec.p << "-channel length-" << spec.t
            << " '" << specfact::kind_name(spec.kind) << "' series to "
            << args.output_dir << '\n';
}

// ── fit ──────────────────────────────────────────────────────────────────────

struct FitArgs {
  std::string input;
  std::string output_dir;
  std::string config_path;
  bool dry_run = false;
  specfact::RunConfig flags;  // staging area for explicitly passed options
};

void write_model_probabilities(const fs::path& path,
                               const Eigen::VectorXd& probs) {
  std::ofstream out = open_out(path);
  out << "l,probability\n";
  for (Eigen::Index l = 0; l < probs.size(); ++l)
    out << (l + 1) << ',' << fmt17(probs(l)) << '\n';
  finish(out, path);
}

void write_breakpoints(const fs::path& path, const Eigen::VectorXd& density) {
  std::ofstream out = open_out(path);
  out << "t,probability\n";
  for (Eigen::Index t = 0; t < density.size(); ++t)
    out << t << ',' << fmt17(density(t)) << '\n';
  finish(out, path);
}

void write_functional(const fs::path& path,
                      const specfact::SummaryGrids& grids,
                      const specfact::FunctionalSummary& fn) {
  std::ofstream out = open_out(path);
  out << "u,omega,mean,lower,upper\n";
  for (Eigen::Index iu = 0; iu < grids.u.size(); ++iu)
    for (Eigen::Index iw = 0; iw < grids.omega.size(); ++iw)
      out << fmt17(grids.u(iu)) << ',' << fmt17(grids.omega(iw)) << ','
          << fmt17(fn.mean(iu, iw)) << ',' << fmt17(fn.lower(iu, iw)) << ','
          << fmt17(fn.upper(iu, iw)) << '\n';
  finish(out, path);
}

void write_summary_files(const fs::path& dir,
                         const specfact::PosteriorSummary& summary) {
  write_model_probabilities(dir / "model_probabilities.csv",
                            summary.model_probs);
  write_breakpoints(dir / "breakpoints.csv", summary.breakpoints);
  for (const specfact::FunctionalSummary& fn : summary.functionals)
    write_functional(dir / ("functional_" + fn.spec.label() + ".csv"),
                     summary.grids, fn);

  specfact::SpectralMatrixGrid grid;
  grid.u = summary.grids.u;
  grid.omega = summary.grids.omega;
  grid.p = summary.channels;
  grid.cells = summary.mean;
  specfact::save_grid(grid, (dir / "mean_spectrum.bin").string());
}

void cmd_fit(const FitArgs& args, const std::vector<const CLI::Option*>& set,
             const std::vector<std::function<void(specfact::RunConfig&)>>&
                 apply) {
  specfact::RunConfig cfg;
  if (!args.config_path.empty())
    cfg = load_json(args.config_path).get<specfact::RunConfig>();
  for (std::size_t i = 0; i < set.size(); ++i)
    if (set[i]->count() > 0) apply[i](cfg);

  std::optional<specfact::MultiSeries> series;
  if (!args.input.empty()) {
    series = specfact::load_csv(args.input, /*has_header=*/true);
    if (cfg.standardize_input) series = specfact::standardize(*series);
    if (cfg.p > 0 && cfg.p != series->channels())
      throw std::invalid_argument(
          "fit: configured p does not match the input channel count");
    cfg.p = static_cast<int>(series->channels());
    cfg.validate(series->length());
    cfg.t = series->length();
  } else if (args.dry_run) {
    if (cfg.t <= 0 || cfg.p <= 0)
      throw std::invalid_argument(
          "fit: a dry run without --input needs p and t in the configuration");
    cfg.validate();
  } else {
    throw std::invalid_argument("fit: --input is required");
  }

  const std::string hash = specfact::config_hash(cfg);

  if (args.dry_run) {
    std::cout << json{{"config", cfg}, {"config_hash", hash}}.dump(2) << '\n';
    std::cerr << "fit: configuration valid (dry run, nothing sampled)\n";
    return;
  }
  if (args.output_dir.empty())
    throw std::invalid_argument("fit: --output-dir is required");

  ensure_dir(args.output_dir);
  const fs::path dir(args.output_dir);
  write_json(dir / "config.json", json(cfg));

  // One collector per chain; merged in chain order afterwards, so the
  // concurrent schedule cannot reorder anything.
  std::vector<std::vector<specfact::ArchivedDraw>> chain_draws(
      static_cast<std::size_t>(cfg.chains));
  std::vector<specfact::ChainDiagnostics> chain_diag(
      static_cast<std::size_t>(cfg.chains));
  std::vector<std::exception_ptr> chain_error(
      static_cast<std::size_t>(cfg.chains));

  auto run_one = [&](int c) {
    const auto ci = static_cast<std::size_t>(c);
    try {
      auto sink = [&, ci](const specfact::ChainDraw& draw) {
        chain_draws[ci].push_back(specfact::snapshot(
            draw, /*keep_params=*/true, /*keep_factors=*/cfg.store_factors));
      };
      chain_diag[ci] = specfact::run_chain(
          series->values, cfg.model(), cfg.hyper(), cfg.iterations,
          cfg.burn_in, cfg.seed + static_cast<std::uint64_t>(c), sink,
          c == 0 ? &std::cerr : nullptr);
    } catch (...) {
      chain_error[ci] = std::current_exception();
    }
  };

  if (cfg.chains == 1) {
    run_one(0);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(cfg.chains));
    for (int c = 0; c < cfg.chains; ++c) workers.emplace_back(run_one, c);
    for (std::thread& worker : workers) worker.join();
  }
  for (const std::exception_ptr& err : chain_error)
    if (err) std::rethrow_exception(err);

  specfact::ArchiveHeader header;
  header.p = cfg.p;
  header.q = cfg.q;
  header.s = cfg.s;
  header.t = cfg.t;
  header.l_max = cfg.l_max;
  header.t_min = cfg.t_min;
  header.seed = cfg.seed;
  header.config_hash = hash;
  header.store_factors = cfg.store_factors;
  header.iterations = cfg.iterations;
  header.burn_in = cfg.burn_in;

  std::vector<specfact::ArchivedDraw> draws;
  {
    specfact::ChainArchiveWriter writer((dir / "chain.spfchain").string(),
                                        header);
    for (const auto& part : chain_draws)
      for (const specfact::ArchivedDraw& draw : part) {
        writer.append(draw);
        draws.push_back(draw);
      }
    writer.close();
  }

  json diag_chains = json::array();
  for (int c = 0; c < cfg.chains; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    const specfact::ChainDiagnostics& d = chain_diag[ci];
    diag_chains.push_back(
        {{"seed", cfg.seed + static_cast<std::uint64_t>(c)},
         {"draws", chain_draws[ci].size()},
         {"birth", {d.birth_attempts, d.birth_accepts}},
         {"death", {d.death_attempts, d.death_accepts}},
         {"within", {d.within_attempts, d.within_accepts}},
         {"visits", d.visits},
         {"theta", std::vector<double>(d.theta.data(),
                                       d.theta.data() + d.theta.size())}});
  }
  write_json(dir / "diagnostics.json", json{{"config_hash", hash},
                                            {"input", args.input},
                                            {"chains", diag_chains}});

  const specfact::PosteriorSummary summary = specfact::posterior_spectrum(
      draws, cfg.l_max, cfg.t, cfg.grids(),
      specfact::default_functionals(cfg.p));
  write_summary_files(dir, summary);

  std::cerr << "fit: " << draws.size() << " draws across " << cfg.chains
            << (cfg.chains == 1 ? " chain" : " chains") << ", outputs in "
            << args.output_dir << '\n';
}

// ── baseline ─────────────────────────────────────────────────────────────────

struct BaselineArgs {
  std::string input;
  std::string output_dir;
  std::int64_t block = 256;
  double overlap = 0.5;
  std::vector<int> spans;
  bool taper = false;
};

void cmd_baseline(const BaselineArgs& args) {
  specfact::RollConfig cfg;
  cfg.block = args.block;
  cfg.overlap = args.overlap;
  cfg.spans = args.spans;
  cfg.taper = args.taper;

  const specfact::MultiSeries series =
      specfact::load_csv(args.input, /*has_header=*/true);
  cfg.validate(series.length());

  const specfact::RollingEstimate est =
      specfact::rolling_window_estimate(series.values, cfg);

  ensure_dir(args.output_dir);
  const fs::path dir(args.output_dir);
  specfact::save_rolling(est, (dir / "baseline.bin").string());

  const json config_doc = {{"block", cfg.block},
                           {"overlap", cfg.overlap},
                           {"spans", cfg.spans},
                           {"taper", cfg.taper}};
  write_json(dir / "baseline.json",
             {{"config", config_doc},
              {"config_hash", specfact::fnv1a_hex(config_doc.dump())},
              {"input", args.input},
              {"blocks", est.blocks()},
              {"chosen_span", est.chosen_span}});

  std::cerr << "baseline: " << est.blocks() << " blocks of length "
            << est.block << ", outputs in " << args.output_dir << '\n';
}

// ── evaluate ─────────────────────────────────────────────────────────────────

struct EvaluateArgs {
  std::string estimate;
  std::string truth;
  std::string output_dir;
};

void cmd_evaluate(const EvaluateArgs& args) {
  const specfact::ProcessSpec spec =
      specfact::ProcessSpec::from_json(load_json(args.truth));
  const specfact::ProcessModel model = specfact::build_model(spec);

  const std::string format = specfact::binary_format_of(args.estimate);
  specfact::MiseReport report;
  if (format == "chain") {
    specfact::ChainArchiveReader reader(args.estimate);
    if (reader.header().p != spec.p || reader.header().t != spec.t)
      throw std::invalid_argument(
          "evaluate: estimate dimensions do not match the truth descriptor");
    report = specfact::mise_posterior_vs_truth(reader.read_all(), model);
  } else if (format == "rolling") {
    const specfact::RollingEstimate est =
        specfact::load_rolling(args.estimate);
    if (est.cells.empty() || est.cells.front().rows() != spec.p ||
        est.t != spec.t)
      throw std::invalid_argument(
          "evaluate: estimate dimensions do not match the truth descriptor");
    report = specfact::mise_rolling_vs_truth(est, model);
  } else {
    throw std::invalid_argument(
        "evaluate: '" + args.estimate +
        "' is neither a chain archive nor a rolling-window estimate");
  }

  std::ostringstream csv;
  csv << "mise,mise_d,mise_o\n"
      << fmt17(report.mise) << ',' << fmt17(report.mise_d) << ','
      << fmt17(report.mise_o) << '\n';
  std::cout << csv.str();
  if (!args.output_dir.empty()) {
    ensure_dir(args.output_dir);
    const fs::path path = fs::path(args.output_dir) / "mise.csv";
    std::ofstream out = open_out(path);
    out << csv.str();
    finish(out, path);
  }
}

// ── summarize ────────────────────────────────────────────────────────────────

struct SummarizeArgs {
  std::string input;
  std::string output_dir;
  int n_u = 100;
  int n_omega = 128;
  std::vector<std::string> coherence;
  std::vector<std::string> bands;
  double rate = 0.0;
};

void cmd_summarize(const SummarizeArgs& args) {
  specfact::ChainArchiveReader reader(args.input);
  const specfact::ArchiveHeader header = reader.header();
  const std::vector<specfact::ArchivedDraw> draws = reader.read_all();

  const specfact::SummaryGrids grids =
      specfact::SummaryGrids::defaults(args.n_u, args.n_omega);

  std::vector<specfact::FunctionalSpec> functionals =
      specfact::default_functionals(header.p);
  for (const std::string& pair : args.coherence) {
    const std::vector<std::string> parts = split_on(pair, ':');
    if (parts.size() != 2)
      throw std::invalid_argument("--coherence expects a:b, got '" + pair +
                                  "'");
    specfact::FunctionalSpec fn;
    fn.kind = specfact::FunctionalKind::coherence;
    fn.a = static_cast<int>(parse_double(parts[0], "--coherence channel"));
    fn.b = static_cast<int>(parse_double(parts[1], "--coherence channel"));
    if (fn.a < 0 || fn.b < 0 || fn.a >= header.p || fn.b >= header.p ||
        fn.a == fn.b)
      throw std::invalid_argument("--coherence channels must be distinct and in [0, " +
                                  std::to_string(header.p - 1) + "]");
    functionals.push_back(fn);
  }

  std::vector<specfact::Band> bands;
  for (const std::string& text : args.bands) bands.push_back(parse_band(text));
  std::optional<double> rate;
  if (args.rate > 0.0) rate = args.rate;

  const specfact::PosteriorSummary summary = specfact::posterior_spectrum(
      draws, header.l_max, header.t, grids, functionals);

  ensure_dir(args.output_dir);
  const fs::path dir(args.output_dir);
  write_summary_files(dir, summary);

  for (const specfact::Band& band : bands) {
    const std::string tag = band_tag(band);
    std::ofstream power = open_out(dir / ("band_" + tag + "_power.csv"));
    std::ofstream coh = open_out(dir / ("band_" + tag + "_coherence.csv"));
    power << "u,channel,power\n";
    coh << "u,a,b,coherence\n";
    std::vector<Eigen::MatrixXcd> row(
        static_cast<std::size_t>(grids.omega.size()));
    for (Eigen::Index iu = 0; iu < grids.u.size(); ++iu) {
      for (Eigen::Index iw = 0; iw < grids.omega.size(); ++iw)
        row[static_cast<std::size_t>(iw)] =
            summary.mean_at(static_cast<int>(iu), static_cast<int>(iw));
      const Eigen::MatrixXcd collapsed =
          specfact::band_collapse(grids.omega, row, band, rate);
      const Eigen::MatrixXd rho = specfact::squared_coherence(collapsed);
      for (int a = 0; a < header.p; ++a)
        power << fmt17(grids.u(iu)) << ',' << a << ','
              << fmt17(collapsed(a, a).real()) << '\n';
      for (int a = 0; a < header.p; ++a)
        for (int b = a + 1; b < header.p; ++b)
          coh << fmt17(grids.u(iu)) << ',' << a << ',' << b << ','
              << fmt17(rho(a, b)) << '\n';
    }
    finish(power, dir / ("band_" + tag + "_power.csv"));
    finish(coh, dir / ("band_" + tag + "_coherence.csv"));
  }

  std::cerr << "summarize: " << draws.size() << " draws on a " << args.n_u
            << "×" << args.n_omega << " grid, outputs in " << args.output_dir
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Adaptive spectral estimation for high-dimensional nonstationary time "
      "series: piecewise-stationary factor-model sampler, rolling-window "
      "baseline, and evaluation utilities"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Draw one of the built-in test processes");
  simulate->add_option("--process", sim.process,
                       "piecewise | stationary | four-segment | slow-var")
      ->required();
  simulate->add_option("--p", sim.p, "Channels");
  simulate->add_option("--t", sim.t, "Series length");
  simulate->add_option("--seed", sim.seed, "Generator seed");
  simulate->add_option("--output-dir", sim.output_dir, "Output directory")
      ->required();
  simulate->callback([&] { cmd_simulate(sim); });

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand(
      "fit", "Sample the piecewise factor model and summarize the posterior");
  fit->add_option("--input", fit_args.input, "Series CSV (header row)");
  fit->add_option("--output-dir", fit_args.output_dir, "Output directory");
  fit->add_option("--config", fit_args.config_path,
                  "JSON configuration document; flags override it");
  fit->add_flag("--dry-run", fit_args.dry_run,
                "Validate the configuration and exit without sampling");

  // Explicit flags override the config document; pairing each option with
  // its application keeps precedence in one place.
  std::vector<const CLI::Option*> fit_set;
  std::vector<std::function<void(specfact::RunConfig&)>> fit_apply;
  specfact::RunConfig& fl = fit_args.flags;
  auto override_opt = [&](CLI::Option* opt, auto apply) {
    fit_set.push_back(opt);
    fit_apply.push_back(apply);
  };
  override_opt(fit->add_option("--q", fl.q, "Factors"),
               [&](specfact::RunConfig& c) { c.q = fl.q; });
  override_opt(fit->add_option("--s", fl.s, "Basis order per curve part"),
               [&](specfact::RunConfig& c) { c.s = fl.s; });
  override_opt(fit->add_option("--nu", fl.nu, "Half-t degrees of freedom"),
               [&](specfact::RunConfig& c) { c.nu = fl.nu; });
  override_opt(fit->add_option("--g-eps", fl.g_eps, "Half-t scale of σ"),
               [&](specfact::RunConfig& c) { c.g_eps = fl.g_eps; });
  override_opt(fit->add_option("--g-tau", fl.g_tau, "Half-t scale of τ"),
               [&](specfact::RunConfig& c) { c.g_tau = fl.g_tau; });
  override_opt(fit->add_option("--a1", fl.a1, "Shrinkage shape, first factor"),
               [&](specfact::RunConfig& c) { c.a1 = fl.a1; });
  override_opt(fit->add_option("--a2", fl.a2, "Shrinkage shape, later factors"),
               [&](specfact::RunConfig& c) { c.a2 = fl.a2; });
  override_opt(fit->add_option("--lmax", fl.l_max, "Maximum segments"),
               [&](specfact::RunConfig& c) { c.l_max = fl.l_max; });
  override_opt(fit->add_option("--tmin", fl.t_min, "Minimum segment length"),
               [&](specfact::RunConfig& c) { c.t_min = fl.t_min; });
  override_opt(fit->add_option("--iters", fl.iterations, "Total iterations"),
               [&](specfact::RunConfig& c) { c.iterations = fl.iterations; });
  override_opt(fit->add_option("--burnin", fl.burn_in, "Burn-in iterations"),
               [&](specfact::RunConfig& c) { c.burn_in = fl.burn_in; });
  override_opt(fit->add_option("--seed", fl.seed, "Chain seed"),
               [&](specfact::RunConfig& c) { c.seed = fl.seed; });
  override_opt(fit->add_option("--chains", fl.chains,
                               "Concurrent chains, seeds seed+0..n-1"),
               [&](specfact::RunConfig& c) { c.chains = fl.chains; });
  override_opt(fit->add_option("--n-u", fl.n_u, "Summary grid: time points"),
               [&](specfact::RunConfig& c) { c.n_u = fl.n_u; });
  override_opt(
      fit->add_option("--n-omega", fl.n_omega, "Summary grid: frequencies"),
      [&](specfact::RunConfig& c) { c.n_omega = fl.n_omega; });
  override_opt(fit->add_option("--p", fl.p, "Expected channel count"),
               [&](specfact::RunConfig& c) { c.p = fl.p; });
  override_opt(fit->add_option("--t", fl.t, "Expected series length"),
               [&](specfact::RunConfig& c) { c.t = fl.t; });
  override_opt(fit->add_flag("--store-factors", fl.store_factors,
                             "Archive latent factors as well"),
               [&](specfact::RunConfig& c) {
                 c.store_factors = fl.store_factors;
               });
  override_opt(fit->add_flag("--standardize", fl.standardize_input,
                             "Standardize each channel before fitting"),
               [&](specfact::RunConfig& c) {
                 c.standardize_input = fl.standardize_input;
               });
  fit->callback([&] { cmd_fit(fit_args, fit_set, fit_apply); });

  BaselineArgs base;
  CLI::App* baseline = app.add_subcommand(
      "baseline", "Rolling-window smoothed periodogram with GCV spans");
  baseline->add_option("--input", base.input, "Series CSV (header row)")
      ->required();
  baseline->add_option("--output-dir", base.output_dir, "Output directory")
      ->required();
  baseline->add_option("--block", base.block, "Window length B (even)");
  baseline->add_option("--overlap", base.overlap,
                       "Fraction shared by consecutive blocks");
  baseline->add_option("--span", base.spans,
                       "Candidate smoothing span (odd); repeatable");
  baseline->add_flag("--taper", base.taper, "Hann-taper blocks");
  baseline->callback([&] { cmd_baseline(base); });

  EvaluateArgs eval;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Integrated squared error against a known truth");
  evaluate
      ->add_option("--estimate", eval.estimate,
                   "chain.spfchain or baseline.bin")
      ->required();
  evaluate->add_option("--truth", eval.truth, "truth.json from simulate")
      ->required();
  evaluate->add_option("--output-dir", eval.output_dir,
                       "Also write mise.csv here");
  evaluate->callback([&] { cmd_evaluate(eval); });

  SummarizeArgs summ;
  CLI::App* summarize = app.add_subcommand(
      "summarize", "Re-summarize a chain archive on new grids");
  summarize->add_option("--input", summ.input, "Chain archive")->required();
  summarize->add_option("--output-dir", summ.output_dir, "Output directory")
      ->required();
  summarize->add_option("--n-u", summ.n_u, "Summary grid: time points");
  summarize->add_option("--n-omega", summ.n_omega,
                        "Summary grid: frequencies");
  summarize->add_option("--coherence", summ.coherence,
                        "Channel pair a:b for a coherence functional; "
                        "repeatable");
  summarize->add_option("--band", summ.bands,
                        "Frequency band lo:hi (cycles/sample) or lo:hi:hz; "
                        "repeatable");
  summarize->add_option("--rate", summ.rate, "Sample rate in Hz for Hz bands");
  summarize->callback([&] { cmd_summarize(summ); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
}
