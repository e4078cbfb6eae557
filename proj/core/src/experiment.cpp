#include "boostdens/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <openssl/sha.h>

#include "boostdens/metrics.hpp"

namespace boostdens {
namespace {

namespace fs = std::filesystem;

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::string hidden_name(const std::vector<int>& hidden) {
  std::string s;
  for (std::size_t i = 0; i < hidden.size(); ++i) s += (i ? "x" : "") + std::to_string(hidden[i]);
  return s;
}

std::string file_safe(std::string s) {
  for (char& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
  return s;
}

// Box covering both the target's quadrature grid and q0 +- 6 std.
GridSpec covering_grid(const GridSpec& target_grid, const DiagonalGaussian& q0) {
  GridSpec g = target_grid;
  const Vec lo = q0.mean().array() - 6.0 * q0.std().array();
  const Vec hi = q0.mean().array() + 6.0 * q0.std().array();
  g.lo = g.lo.cwiseMin(lo);
  g.hi = g.hi.cwiseMax(hi);
  return g;
}

// One boosting condition: target, learner settings and whether KL is computed.
struct Condition {
  std::string name;
  TargetSpec target;
  std::vector<int> hidden;
  Activation activation;
  bool kl = true;
};

struct Task {
  const Condition* condition;
  int run;
};

BoostConfig boost_config(const ExperimentConfig& cfg, const Condition& cond, std::uint64_t run_seed) {
  BoostConfig bc;
  bc.rounds = cfg.rounds;
  bc.policy = cfg.policy;
  bc.hidden = cond.hidden;
  bc.activation = cond.activation;
  bc.train.epochs = cfg.epochs;
  bc.train.batch_size = cfg.batch_size;
  bc.train.early_stop_gap = cfg.early_stop_gap;
  bc.train.test_fraction = cfg.test_fraction;
  bc.n_p = cfg.n_p;
  bc.n_q = cfg.n_q;
  bc.sampler.proposal_std = cfg.proposal_std;
  bc.sampler.burn_in = cfg.burn_in;
  bc.sampler.n_chains = cfg.n_chains;
  bc.z_kind = cfg.z_estimator;
  bc.z_draws = cfg.z_draws;
  bc.metrics.nll_samples = cfg.nll_samples;
  bc.metrics.coverage_kappa = cfg.coverage_kappa;
  bc.metrics.coverage_samples = cfg.coverage_samples;
  bc.seed = run_seed;
  return bc;
}

// Runs one boosting condition and, for the KDE comparison, the kernel baselines
// on the same P sample.
std::vector<RunRecord> run_task(const ExperimentConfig& cfg, const Condition& cond, int run) {
  const std::uint64_t run_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(run));
  const GaussianMixture target = cond.target.make(run_seed);
  BoostConfig bc = boost_config(cfg, cond, run_seed);
  const Matrix p = draw_training_sample(target, bc);

  const DiagonalGaussian q0 =
      cfg.q0 == "empirical" ? DiagonalGaussian::fit(p) : DiagonalGaussian::isotropic(target.dim(), cfg.q0_sigma);
  if (target.dim() <= 2) {
    const GridSpec tg = target.default_grid(cfg.grid_points);
    if (cond.kl) bc.metrics.kl_grid = tg;
    bc.z_grid = covering_grid(tg, q0);
  }

  std::vector<RunRecord> out;
  BoostResult res = run_adabode(target, q0, bc);
  out.push_back({cond.name, run, run_seed, std::move(res.trace), std::move(res.density)});

  if (cfg.experiment == ExperimentKind::KdeCompare) {
    for (Kernel k : cfg.kernels) {
      const KdeModel kde = KdeModel::fit(p, k);
      TraceRow row;
      row.nll = nll_normalized_on(p, target, kde);
      out.push_back({std::string(to_string(k)), run, run_seed, BoostTrace{{row}}, std::nullopt});
    }
  }
  return out;
}

std::vector<Condition> conditions(const ExperimentConfig& cfg) {
  std::vector<Condition> out;
  const Condition base{"default", cfg.target, cfg.hidden, cfg.activation, true};
  switch (cfg.experiment) {
    case ExperimentKind::Ring:
    case ExperimentKind::RandomMixture:
    case ExperimentKind::KdeCompare:
      out.push_back(base);
      if (cfg.experiment == ExperimentKind::KdeCompare) out.back().name = "boosted";
      break;
    case ExperimentKind::Activations:
      for (Activation a : cfg.activations) {
        Condition c = base;
        c.name = std::string(to_string(a));
        c.activation = a;
        out.push_back(c);
      }
      break;
    case ExperimentKind::Topology:
      for (const auto& h : cfg.topologies) {
        Condition c = base;
        c.name = hidden_name(h);
        c.hidden = h;
        out.push_back(c);
      }
      break;
    case ExperimentKind::Dimensions:
      for (int d : cfg.dims) {
        Condition c = base;
        c.name = "d=" + std::to_string(d);
        c.target.dim = d;
        c.kl = false;
        out.push_back(c);
      }
      break;
    case ExperimentKind::Theory: break;
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  out << text;
}

template <typename T>
T get_field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Ring: return "ring";
    case ExperimentKind::RandomMixture: return "random_mixture";
    case ExperimentKind::Activations: return "activations";
    case ExperimentKind::Topology: return "topology";
    case ExperimentKind::Dimensions: return "dimensions";
    case ExperimentKind::KdeCompare: return "kde_compare";
    case ExperimentKind::Theory: return "theory";
  }
  return "?";
}

ExperimentKind experiment_from_string(std::string_view name) {
  for (auto k : {ExperimentKind::Ring, ExperimentKind::RandomMixture, ExperimentKind::Activations,
                 ExperimentKind::Topology, ExperimentKind::Dimensions, ExperimentKind::KdeCompare,
                 ExperimentKind::Theory})
    if (to_string(k) == name) return k;
  throw ConfigError("config field 'experiment': unknown experiment '" + std::string(name) + "'");
}

// ------------------------------------------------------------------ target

void TargetSpec::validate() const {
  if (kind != "ring" && kind != "random") throw ConfigError("config field 'target.kind': expected ring or random");
  if (kind == "ring" && dim != 2) throw ConfigError("config field 'target.dim': ring targets are two-dimensional");
  if (dim < 1) throw ConfigError("config field 'target.dim': must be >= 1");
  if (modes < 1) throw ConfigError("config field 'target.modes': must be >= 1");
  if (!(sigma > 0.0)) throw ConfigError("config field 'target.sigma': must be positive");
  if (!(box_halfwidth > 0.0)) throw ConfigError("config field 'target.box_halfwidth': must be positive");
  if (!(radius >= 0.0)) throw ConfigError("config field 'target.radius': must be >= 0");
}

GaussianMixture TargetSpec::make(std::uint64_t run_seed) const {
  validate();
  if (kind == "ring") return mixture_ring(modes, radius, sigma, seed.value_or(run_seed));
  return mixture_random(dim, modes, box_halfwidth, sigma, seed.value_or(derive_seed(run_seed, 0x746172)));
}

nlohmann::json to_json(const TargetSpec& t) {
  nlohmann::json j{{"kind", t.kind},     {"dim", t.dim},     {"modes", t.modes}, {"radius", t.radius},
                   {"box_halfwidth", t.box_halfwidth}, {"sigma", t.sigma}};
  j["seed"] = t.seed ? nlohmann::json(*t.seed) : nlohmann::json(nullptr);
  return j;
}

TargetSpec target_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"kind", "dim", "modes", "radius", "box_halfwidth", "sigma", "seed"};
  if (!j.is_object()) throw ConfigError("config field 'target': expected an object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("config field 'target." + key + "': unknown key");
  TargetSpec t;
  if (j.contains("kind")) t.kind = get_field<std::string>(j, "kind");
  if (j.contains("dim")) t.dim = get_field<int>(j, "dim");
  if (j.contains("modes")) t.modes = get_field<int>(j, "modes");
  if (j.contains("radius")) t.radius = get_field<double>(j, "radius");
  if (j.contains("box_halfwidth")) t.box_halfwidth = get_field<double>(j, "box_halfwidth");
  if (j.contains("sigma")) t.sigma = get_field<double>(j, "sigma");
  if (j.contains("seed") && !j.at("seed").is_null()) t.seed = get_field<std::uint64_t>(j, "seed");
  t.validate();
  return t;
}

// ------------------------------------------------------------------ config

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& msg) {
    throw ConfigError("config field '" + field + "': " + msg);
  };
  target.validate();
  if (q0 != "isotropic" && q0 != "empirical") fail("q0", "expected isotropic or empirical");
  if (!(q0_sigma > 0.0)) fail("q0_sigma", "must be positive");
  if (hidden.empty()) fail("hidden", "needs at least one layer");
  for (int w : hidden)
    if (w < 1) fail("hidden", "widths must be positive");
  if (epochs < 1) fail("epochs", "must be >= 1");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (early_stop_gap && !(*early_stop_gap > 0.0 && *early_stop_gap < 1.0)) fail("early_stop_gap", "must lie in (0, 1)");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail("test_fraction", "must lie in (0, 1)");
  try {
    policy.validate();
  } catch (const ConfigError& e) {
    fail("policy", e.what());
  }
  if (rounds < 1) fail("rounds", "must be >= 1");
  if (n_runs < 1) fail("n_runs", "must be >= 1");
  if (n_p < 2) fail("n_p", "must be >= 2");
  if (n_q < 2) fail("n_q", "must be >= 2");
  if (grid_points < 16) fail("grid_points", "must be >= 16");
  if (z_draws < 1) fail("z_draws", "must be >= 1");
  if (!(proposal_std > 0.0)) fail("proposal_std", "must be positive");
  if (n_chains < 1) fail("n_chains", "must be >= 1");
  if (coverage_kappa && !(*coverage_kappa > 0.0 && *coverage_kappa < 1.0)) fail("coverage_kappa", "must lie in (0, 1)");
  if (experiment == ExperimentKind::Activations && activations.empty()) fail("activations", "must not be empty");
  if (experiment == ExperimentKind::Topology) {
    if (topologies.empty()) fail("topologies", "must not be empty");
    for (const auto& h : topologies)
      if (h.empty() || std::any_of(h.begin(), h.end(), [](int w) { return w < 1; }))
        fail("topologies", "every entry needs positive widths");
  }
  if (experiment == ExperimentKind::Dimensions) {
    if (dims.empty()) fail("dims", "must not be empty");
    for (int d : dims)
      if (d < 1) fail("dims", "dimensions must be >= 1");
    if (target.kind != "random") fail("target.kind", "the dimensions experiment needs a random target");
  }
  if (experiment == ExperimentKind::Theory && theory_trials < 1) fail("theory_trials", "must be >= 1");
  if (jobs < 1) fail("jobs", "must be >= 1");
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind, bool full) {
  ExperimentConfig c;
  c.experiment = kind;
  c.epochs = full ? 3000 : 600;
  c.grid_points = full ? 400 : 200;
  switch (kind) {
    case ExperimentKind::Ring:
    case ExperimentKind::Activations:
    case ExperimentKind::Topology:
    case ExperimentKind::Theory:
      break;
    case ExperimentKind::RandomMixture:
      c.target.kind = "random";
      break;
    case ExperimentKind::Dimensions:
      c.target.kind = "random";
      c.hidden = {10, 10};
      c.epochs = full ? 2000 : 600;
      c.batch_size = 250;
      c.early_stop_gap = 0.2;
      c.rounds = 10;
      break;
    case ExperimentKind::KdeCompare:
      c.target.kind = "random";
      c.q0 = "empirical";
      c.hidden = {10, 10};
      c.policy = StepPolicy::linesearch_nll();
      c.rounds = 2;
      break;
  }
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json acts = nlohmann::json::array(), kernels = nlohmann::json::array();
  for (auto a : c.activations) acts.push_back(std::string(to_string(a)));
  for (auto k : c.kernels) kernels.push_back(std::string(to_string(k)));
  nlohmann::json j{{"experiment", std::string(to_string(c.experiment))},
                   {"target", to_json(c.target)},
                   {"q0", c.q0},
                   {"q0_sigma", c.q0_sigma},
                   {"hidden", c.hidden},
                   {"activation", std::string(to_string(c.activation))},
                   {"epochs", c.epochs},
                   {"batch_size", c.batch_size},
                   {"test_fraction", c.test_fraction},
                   {"policy", to_string(c.policy)},
                   {"rounds", c.rounds},
                   {"n_runs", c.n_runs},
                   {"seed", c.seed},
                   {"n_p", c.n_p},
                   {"n_q", c.n_q},
                   {"grid_points", c.grid_points},
                   {"z_estimator", std::string(to_string(c.z_estimator))},
                   {"z_draws", c.z_draws},
                   {"proposal_std", c.proposal_std},
                   {"burn_in", c.burn_in},
                   {"n_chains", c.n_chains},
                   {"coverage_samples", c.coverage_samples},
                   {"nll_samples", c.nll_samples},
                   {"activations", acts},
                   {"topologies", c.topologies},
                   {"dims", c.dims},
                   {"kernels", kernels},
                   {"theory_trials", c.theory_trials},
                   {"output_dir", c.output_dir},
                   {"jobs", c.jobs}};
  j["early_stop_gap"] = c.early_stop_gap ? nlohmann::json(*c.early_stop_gap) : nlohmann::json(nullptr);
  j["coverage_kappa"] = c.coverage_kappa ? nlohmann::json(*c.coverage_kappa) : nlohmann::json(nullptr);
  return j;
}

ExperimentConfig experiment_from_json(const nlohmann::json& j, bool full) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  if (!j.contains("experiment")) throw ConfigError("config field 'experiment': missing");
  ExperimentConfig c = ExperimentConfig::defaults(experiment_from_string(get_field<std::string>(j, "experiment")), full);

  using Setter = std::function<void(const nlohmann::json&)>;
  const std::map<std::string, Setter> setters{
      {"experiment", [](const nlohmann::json&) {}},
      {"target", [&](const nlohmann::json& v) { c.target = target_from_json(v); }},
      {"q0", [&](const nlohmann::json&) { c.q0 = get_field<std::string>(j, "q0"); }},
      {"q0_sigma", [&](const nlohmann::json&) { c.q0_sigma = get_field<double>(j, "q0_sigma"); }},
      {"hidden", [&](const nlohmann::json&) { c.hidden = get_field<std::vector<int>>(j, "hidden"); }},
      {"activation", [&](const nlohmann::json&) { c.activation = activation_from_string(get_field<std::string>(j, "activation")); }},
      {"epochs", [&](const nlohmann::json&) { c.epochs = get_field<int>(j, "epochs"); }},
      {"batch_size", [&](const nlohmann::json&) { c.batch_size = get_field<int>(j, "batch_size"); }},
      {"early_stop_gap", [&](const nlohmann::json& v) {
         if (v.is_null()) c.early_stop_gap.reset();
         else c.early_stop_gap = get_field<double>(j, "early_stop_gap");
       }},
      {"test_fraction", [&](const nlohmann::json&) { c.test_fraction = get_field<double>(j, "test_fraction"); }},
      {"policy", [&](const nlohmann::json&) { c.policy = step_policy_from_string(get_field<std::string>(j, "policy")); }},
      {"rounds", [&](const nlohmann::json&) { c.rounds = get_field<int>(j, "rounds"); }},
      {"n_runs", [&](const nlohmann::json&) { c.n_runs = get_field<int>(j, "n_runs"); }},
      {"seed", [&](const nlohmann::json&) { c.seed = get_field<std::uint64_t>(j, "seed"); }},
      {"n_p", [&](const nlohmann::json&) { c.n_p = get_field<std::size_t>(j, "n_p"); }},
      {"n_q", [&](const nlohmann::json&) { c.n_q = get_field<std::size_t>(j, "n_q"); }},
      {"grid_points", [&](const nlohmann::json&) { c.grid_points = get_field<int>(j, "grid_points"); }},
      {"z_estimator", [&](const nlohmann::json&) { c.z_estimator = z_estimator_from_string(get_field<std::string>(j, "z_estimator")); }},
      {"z_draws", [&](const nlohmann::json&) { c.z_draws = get_field<std::size_t>(j, "z_draws"); }},
      {"proposal_std", [&](const nlohmann::json&) { c.proposal_std = get_field<double>(j, "proposal_std"); }},
      {"burn_in", [&](const nlohmann::json&) { c.burn_in = get_field<std::size_t>(j, "burn_in"); }},
      {"n_chains", [&](const nlohmann::json&) { c.n_chains = get_field<std::size_t>(j, "n_chains"); }},
      {"coverage_kappa", [&](const nlohmann::json& v) {
         if (v.is_null()) c.coverage_kappa.reset();
         else c.coverage_kappa = get_field<double>(j, "coverage_kappa");
       }},
      {"coverage_samples", [&](const nlohmann::json&) { c.coverage_samples = get_field<std::size_t>(j, "coverage_samples"); }},
      {"nll_samples", [&](const nlohmann::json&) { c.nll_samples = get_field<std::size_t>(j, "nll_samples"); }},
      {"activations", [&](const nlohmann::json&) {
         c.activations.clear();
         for (const auto& s : get_field<std::vector<std::string>>(j, "activations")) c.activations.push_back(activation_from_string(s));
       }},
      {"topologies", [&](const nlohmann::json&) { c.topologies = get_field<std::vector<std::vector<int>>>(j, "topologies"); }},
      {"dims", [&](const nlohmann::json&) { c.dims = get_field<std::vector<int>>(j, "dims"); }},
      {"kernels", [&](const nlohmann::json&) {
         c.kernels.clear();
         for (const auto& s : get_field<std::vector<std::string>>(j, "kernels")) c.kernels.push_back(kernel_from_string(s));
       }},
      {"theory_trials", [&](const nlohmann::json&) { c.theory_trials = get_field<std::size_t>(j, "theory_trials"); }},
      {"output_dir", [&](const nlohmann::json&) { c.output_dir = get_field<std::string>(j, "output_dir"); }},
      {"jobs", [&](const nlohmann::json&) { c.jobs = get_field<int>(j, "jobs"); }},
  };
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config field '" + key + "': unknown key");
    try {
      it->second(value);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError("config field '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

// ------------------------------------------------------------------ aggregation

std::pair<std::optional<double>, std::optional<double>> mean_ci95(const std::vector<std::optional<double>>& v) {
  std::vector<double> x;
  for (const auto& o : v)
    if (o && std::isfinite(*o)) x.push_back(*o);
  if (x.empty()) return {std::nullopt, std::nullopt};
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double a : x) mean += a;
  mean /= n;
  if (x.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double a : x) ss += (a - mean) * (a - mean);
  return {mean, 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

std::vector<AggregateRow> aggregate_runs(std::string_view experiment, const std::vector<RunRecord>& runs) {
  // Conditions keep first-appearance order; rows within a condition are sorted by t.
  std::vector<std::string> order;
  std::map<std::string, std::map<int, std::vector<const TraceRow*>>> groups;
  for (const auto& r : runs) {
    if (!groups.count(r.condition)) order.push_back(r.condition);
    for (const auto& row : r.trace.rows) groups[r.condition][row.t].push_back(&row);
  }
  std::vector<AggregateRow> out;
  for (const auto& cond : order) {
    for (const auto& [t, rows] : groups[cond]) {
      std::vector<std::optional<double>> kl, nll, acc, cov;
      for (const TraceRow* row : rows) {
        kl.push_back(row->kl);
        nll.push_back(row->nll);
        acc.push_back(row->accuracy);
        cov.push_back(row->coverage);
      }
      AggregateRow a;
      a.experiment = std::string(experiment);
      a.condition = cond;
      a.t = t;
      std::tie(a.kl_mean, a.kl_ci95) = mean_ci95(kl);
      std::tie(a.nll_mean, a.nll_ci95) = mean_ci95(nll);
      std::tie(a.acc_mean, a.acc_ci95) = mean_ci95(acc);
      std::tie(a.coverage_mean, a.coverage_ci95) = mean_ci95(cov);
      out.push_back(a);
    }
  }
  return out;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream os;
  os << "experiment,condition,t,kl_mean,kl_ci95,nll_mean,nll_ci95,acc_mean,acc_ci95,coverage_mean,coverage_ci95\n";
  for (const auto& r : rows) {
    os << r.experiment << ',' << r.condition << ',' << r.t << ',' << format_optional(r.kl_mean) << ','
       << format_optional(r.kl_ci95) << ',' << format_optional(r.nll_mean) << ',' << format_optional(r.nll_ci95)
       << ',' << format_optional(r.acc_mean) << ',' << format_optional(r.acc_ci95) << ','
       << format_optional(r.coverage_mean) << ',' << format_optional(r.coverage_ci95) << '\n';
  }
  return os.str();
}

std::string git_blob_hash(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  std::ostringstream os;
  for (unsigned char b : digest) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(b);
  return os.str();
}

// ------------------------------------------------------------------ runner

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  const fs::path dir = config.output_dir;
  if (!config.output_dir.empty()) fs::create_directories(dir);
  nlohmann::json manifest{{"config", to_json(config)}, {"format", "boostdens/manifest-v1"}};

  if (config.experiment == ExperimentKind::Theory) {
    theory::SuiteConfig sc;
    sc.trials = config.theory_trials;
    sc.seed = config.seed;
    result.theory = theory::run_suite(sc);
    result.exit_code = result.theory->passed() ? 0 : 1;
    nlohmann::json report = theory::to_json(*result.theory);
    nlohmann::json stable = report;
    stable.erase("seconds");
    result.content_hash = git_blob_hash(stable.dump(2));
    if (!config.output_dir.empty()) {
      write_text(dir / "theory.json", report.dump(2) + "\n");
      manifest["outputs"] = {"theory.json"};
      manifest["content_hash"] = result.content_hash;
      write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    }
    return result;
  }

  const std::vector<Condition> conds = conditions(config);
  std::vector<Task> tasks;
  for (const auto& c : conds)
    for (int r = 0; r < config.n_runs; ++r) tasks.push_back({&c, r});

  std::vector<std::vector<RunRecord>> slots(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        slots[i] = run_task(config, *tasks[i].condition, tasks[i].run);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::min<int>(config.jobs, static_cast<int>(tasks.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (auto& s : slots)
    for (auto& r : s) result.runs.push_back(std::move(r));

  // Boosting conditions first, then baselines, each in run order.
  std::stable_sort(result.runs.begin(), result.runs.end(), [&](const RunRecord& a, const RunRecord& b) {
    const bool ab = std::any_of(conds.begin(), conds.end(), [&](const Condition& c) { return c.name == a.condition; });
    const bool bb = std::any_of(conds.begin(), conds.end(), [&](const Condition& c) { return c.name == b.condition; });
    return ab && !bb;
  });

  result.aggregate = aggregate_runs(to_string(config.experiment), result.runs);
  const std::string agg = aggregate_csv(result.aggregate);
  result.content_hash = git_blob_hash(agg);

  if (!config.output_dir.empty()) {
    fs::create_directories(dir / "runs");
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : result.runs) {
      std::ostringstream name;
      name << "runs/" << file_safe(r.condition) << "_run" << std::setw(3) << std::setfill('0') << r.run << ".csv";
      write_text(dir / name.str(), r.trace.to_csv());
      nlohmann::json entry{{"condition", r.condition}, {"run", r.run}, {"seed", r.seed}, {"trace", name.str()}};
      if (r.density) {
        std::string snap = name.str();
        snap.replace(snap.size() - 4, 4, ".json");
        write_text(dir / snap, to_json(*r.density).dump() + "\n");
        entry["density"] = snap;
      }
      runs.push_back(entry);
    }
    write_text(dir / "aggregate.csv", agg);
    manifest["runs"] = runs;
    manifest["outputs"] = {"aggregate.csv"};
    if (config.experiment == ExperimentKind::KdeCompare) {
      // One row per condition: Q_t for the boosted density, then each kernel.
      std::ostringstream table;
      table << "condition,nll_mean,nll_ci95\n";
      for (const auto& a : result.aggregate) {
        const std::string name = a.condition == "boosted" ? "Q" + std::to_string(a.t) : a.condition;
        table << name << ',' << format_optional(a.nll_mean) << ',' << format_optional(a.nll_ci95) << '\n';
      }
      write_text(dir / "kde_table.csv", table.str());
      manifest["outputs"].push_back("kde_table.csv");
    }
    manifest["content_hash"] = result.content_hash;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  }
  return result;
}

}  // namespace boostdens
