#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "boostdens/experiment.hpp"
#include "boostdens/metrics.hpp"

namespace boostdens::cli {
namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("BOOSTDENS_SEED");
  if (!s || !*s) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != std::string(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("BOOSTDENS_SEED: not an unsigned integer: '") + s + "'");
  }
}

struct RunOptions {
  std::string config_path;
  std::string experiment;
  bool full = false;
  std::optional<int> jobs, runs, rounds;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::string output;
};

struct MhOptions {
  double proposal_std = 1.0;
  std::size_t burn_in = 1000;
  std::size_t chains = 8;
  std::optional<std::uint64_t> seed;

  MhConfig config(std::size_t n) const {
    MhConfig c;
    c.n_samples = n;
    c.burn_in = burn_in;
    c.proposal_std = proposal_std;
    c.n_chains = chains;
    c.seed = seed ? *seed : env_seed().value_or(0);
    return c;
  }
};

void add_mh_flags(CLI::App* cmd, MhOptions& mh) {
  cmd->add_option("--proposal-std", mh.proposal_std, "Random-walk proposal std")->capture_default_str();
  cmd->add_option("--burn-in", mh.burn_in, "Burn-in steps per chain")->capture_default_str();
  cmd->add_option("--chains", mh.chains, "Number of chains")->capture_default_str();
  cmd->add_option("--seed", mh.seed, "Seed (default: BOOSTDENS_SEED or 0)");
}

void add_run_flags(CLI::App* cmd, RunOptions& o, bool pick_experiment) {
  cmd->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  if (pick_experiment) cmd->add_option("--experiment", o.experiment, "Experiment name (overrides the file)");
  cmd->add_flag("--full", o.full, "Full-scale defaults (3000 epochs, 400 grid points)");
  cmd->add_option("--jobs", o.jobs, "Concurrent runs");
  cmd->add_option("--runs", o.runs, "Number of runs");
  cmd->add_option("--rounds", o.rounds, "Boosting rounds T");
  cmd->add_option("--seed", o.seed, "Master seed (overrides BOOSTDENS_SEED and the file)");
  cmd->add_option("--output", o.output, "Output directory");
}

// File < BOOSTDENS_SEED < flags.
ExperimentConfig build_config(const RunOptions& o, const std::string& forced_experiment) {
  nlohmann::json j = o.config_path.empty() ? nlohmann::json::object() : read_json(o.config_path);
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  if (!forced_experiment.empty()) j["experiment"] = forced_experiment;
  else if (!o.experiment.empty()) j["experiment"] = o.experiment;
  if (!j.contains("experiment")) throw ConfigError("config field 'experiment': missing (use --experiment or --config)");
  if (auto s = env_seed()) j["seed"] = *s;
  if (o.seed) j["seed"] = *o.seed;
  if (o.jobs) j["jobs"] = *o.jobs;
  if (o.runs) j["n_runs"] = *o.runs;
  if (o.rounds) j["rounds"] = *o.rounds;
  if (o.trials) j["theory_trials"] = *o.trials;
  if (!o.output.empty()) j["output_dir"] = o.output;
  if (!j.contains("output_dir")) j["output_dir"] = "results/" + j["experiment"].get<std::string>();
  return experiment_from_json(j, o.full);
}

int cmd_run(const RunOptions& o, const std::string& forced, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = build_config(o, forced);
  const ExperimentResult res = run_experiment(cfg);
  if (res.theory) {
    out << theory::to_json(*res.theory).dump(2) << '\n';
    if (!res.theory->passed()) err << "theory suite: violations found\n";
  } else {
    out << aggregate_csv(res.aggregate);
  }
  err << "wrote " << cfg.output_dir << " (content hash " << res.content_hash << ")\n";
  return res.exit_code;
}

int cmd_sample(const std::string& snapshot, std::size_t n, const MhOptions& mh, std::ostream& out) {
  const BoostedDensity bd = density_from_json(read_json(snapshot));
  for (int k = 0; k < bd.dim(); ++k) out << (k ? "," : "") << 'x' << k;
  out << '\n';
  if (n == 0) return kExitOk;
  const MhResult res = bd.sample_mh(mh.config(n));
  out.precision(12);
  for (Eigen::Index i = 0; i < res.samples.rows(); ++i) {
    for (Eigen::Index k = 0; k < res.samples.cols(); ++k) out << (k ? "," : "") << res.samples(i, k);
    out << '\n';
  }
  return kExitOk;
}

struct MetricsOptions {
  std::string snapshot;
  std::string target_path;
  TargetSpec target;
  std::optional<std::uint64_t> target_seed;
  std::vector<std::string> which{"kl", "nll", "coverage"};
  double kappa = 0.95;
  std::size_t samples = 10000;
  int grid_points = 200;
  MhOptions mh;
};

int cmd_metrics(const MetricsOptions& o, std::ostream& out) {
  const std::set<std::string> which(o.which.begin(), o.which.end());
  for (const auto& w : which)
    if (w != "kl" && w != "nll" && w != "coverage")
      throw ConfigError("--which: unknown metric '" + w + "' (expected kl, nll, coverage)");
  TargetSpec spec = o.target_path.empty() ? o.target : target_from_json(read_json(o.target_path));
  if (o.target_seed) spec.seed = *o.target_seed;
  BoostedDensity q = density_from_json(read_json(o.snapshot));
  const MhConfig mh = o.mh.config(o.samples);
  q = q.with_sampler_config(mh);
  const GaussianMixture p = spec.make(mh.seed);
  if (p.dim() != q.dim()) throw DimensionError("target has dimension " + std::to_string(p.dim()) +
                                               " but the snapshot has " + std::to_string(q.dim()));
  if (which.count("kl") && p.dim() > 2)
    throw DimensionError("kl is computed by grid quadrature and needs d <= 2 (got d = " + std::to_string(p.dim()) + ")");

  nlohmann::json j = nlohmann::json::object();
  if (which.count("kl")) j["kl"] = kl_grid(p, q, p.default_grid(o.grid_points));
  if (which.count("nll")) j["nll"] = nll_normalized(p, q, o.samples, derive_seed(mh.seed, 1));
  if (which.count("coverage")) {
    j["coverage"] = coverage(p, q, o.kappa, o.samples, o.samples, derive_seed(mh.seed, 2));
    j["kappa"] = o.kappa;
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Boosted density estimation with classifier weak learners", "boostdens"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write traces, aggregate CSV and manifest");
  add_run_flags(run_cmd, run_opts, true);

  RunOptions theory_opts;
  auto* theory_cmd = app.add_subcommand("theory", "Run the randomized theory batteries; exit 1 on a violation");
  add_run_flags(theory_cmd, theory_opts, false);
  theory_cmd->add_option("--trials", theory_opts.trials, "Trials per battery");

  std::string snapshot;
  std::size_t n = 1000;
  MhOptions sample_mh;
  auto* sample_cmd = app.add_subcommand("sample", "Draw MH samples from a density snapshot as CSV");
  sample_cmd->add_option("snapshot", snapshot, "Density snapshot JSON")->required();
  sample_cmd->add_option("-n,--samples", n, "Number of samples")->capture_default_str();
  add_mh_flags(sample_cmd, sample_mh);

  MetricsOptions mo;
  auto* metrics_cmd = app.add_subcommand("metrics", "Evaluate KL, NLL and coverage of a snapshot against a target");
  metrics_cmd->add_option("snapshot", mo.snapshot, "Density snapshot JSON")->required();
  metrics_cmd->add_option("--target-config", mo.target_path, "Target spec JSON (overrides target flags)");
  metrics_cmd->add_option("--target", mo.target.kind, "Target kind: ring or random")->capture_default_str();
  metrics_cmd->add_option("--dim", mo.target.dim, "Target dimension")->capture_default_str();
  metrics_cmd->add_option("--modes", mo.target.modes, "Mixture modes")->capture_default_str();
  metrics_cmd->add_option("--radius", mo.target.radius, "Ring radius")->capture_default_str();
  metrics_cmd->add_option("--box", mo.target.box_halfwidth, "Random-mixture box half-width")->capture_default_str();
  metrics_cmd->add_option("--sigma", mo.target.sigma, "Component std")->capture_default_str();
  metrics_cmd->add_option("--target-seed", mo.target_seed, "Mixture placement seed");
  metrics_cmd->add_option("--which", mo.which, "Metrics: kl, nll, coverage")->delimiter(',')->capture_default_str();
  metrics_cmd->add_option("--kappa", mo.kappa, "Coverage level")->capture_default_str();
  metrics_cmd->add_option("--samples", mo.samples, "Draws for NLL and coverage")->capture_default_str();
  metrics_cmd->add_option("--grid-points", mo.grid_points, "KL grid points per axis")->capture_default_str();
  add_mh_flags(metrics_cmd, mo.mh);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_opts, "", out, err);
    if (*theory_cmd) return cmd_run(theory_opts, "theory", out, err);
    if (*sample_cmd) return cmd_sample(snapshot, n, sample_mh, out);
    if (*metrics_cmd) return cmd_metrics(mo, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace boostdens::cli
