#include "uscx/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uscx/gev.hpp"
#include "uscx/grid.hpp"
#include "uscx/io.hpp"
#include "uscx/maxstable.hpp"
#include "uscx/rng.hpp"
#include "uscx/scenario.hpp"
#include "uscx/transform.hpp"

namespace uscx {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kStatistical = 3;
constexpr int kInternal = 4;

// Deterministic cell text: shortest round-trip digits, explicit inf tokens.
std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0.0 ? "+inf" : "-inf";
  return json(x).dump();
}

// JSON has no infinities; non-finite diagnostics become their cell tokens.
json json_num(double x) { return std::isfinite(x) ? json(x) : json(fmt(x)); }

std::uint64_t parse_u64(const std::string& text, const char* what) {
  std::uint64_t value = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw std::invalid_argument(std::string("invalid ") + what);
  }
  return value;
}

// User-supplied files that fail to open are validation errors, not internal.
std::string slurp_user_file(const fs::path& path) {
  try {
    return read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw std::invalid_argument(e.what());
  }
}

GridField load_field(const fs::path& path) {
  return field_from_csv(slurp_user_file(path));
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  const json cfg = json::parse(slurp_user_file(path));
  if (!cfg.is_object()) throw std::invalid_argument("config must be a JSON object");
  return cfg;
}

void check_keys(const json& cfg, std::initializer_list<const char*> allowed) {
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) known = known || it.key() == key;
    if (!known) throw std::invalid_argument("unknown config key: " + it.key());
  }
}

// All flag storage lives here; exactly one subcommand runs per invocation.
struct CliState {
  std::ostream& out;
  int code = kOk;

  std::string config_path;
  std::uint64_t seed = 0;
  std::int64_t n = 0;
  std::string out_dir;
  int threads = 1;
  std::string format;

  std::string model;
  double radius = 0.25;
  double height = 1.0;
  double lo = 0.0;
  double hi = 1.0;
  int res = 33;

  double probe_a = 0.0;
  double probe_b = 0.0;
  double probe_level = 1.0;
  std::int64_t n_expectation = 100000;
  double z_threshold = 4.0;
  int copies = 2;

  std::string direction;
  std::string input;
  std::string family_file;
  std::string theta_file;
  std::string output;

  std::string entry;

  double q = 0.0;
  double p1 = 0.25;
  double q1 = 0.0;
  double p2 = 0.75;
  double q2 = 0.0;

  std::string builtin;
  std::string limit_path;
  std::vector<std::string> sequence;
  double slack = 1e-9;
  int ball_radius = 2;
};

void add_common(CLI::App* cmd, CliState& st) {
  cmd->add_option("--config", st.config_path,
                  "JSON config file; explicit flags override its values");
  cmd->add_option("--seed", st.seed,
                  "base seed for all random streams (fallback: USCX_SEED, then 0)");
  cmd->add_option("--n", st.n, "sample count used by the sampling subcommands");
  cmd->add_option("--out", st.out_dir, "output directory (default uscx_out)");
  cmd->add_option("--threads", st.threads, "worker thread cap for sampling loops");
  cmd->add_option("--format", st.format, "report format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
}

void add_model_flags(CLI::App* cmd, CliState& st) {
  cmd->add_option("--model", st.model,
                  "spectral family: constant_one, storm, or staircase");
  cmd->add_option("--radius", st.radius, "storm window radius");
  cmd->add_option("--height", st.height, "storm window height");
  cmd->add_option("--lo", st.lo, "domain lower endpoint");
  cmd->add_option("--hi", st.hi, "domain upper endpoint");
  cmd->add_option("--res", st.res, "grid resolution (nodes per axis)");
}

void add_probe_flags(CLI::App* cmd, CliState& st) {
  cmd->add_option("--probe-a", st.probe_a, "probe box lower endpoint (default: domain lo)");
  cmd->add_option("--probe-b", st.probe_b, "probe box upper endpoint (default: domain hi)");
  cmd->add_option("--probe-level", st.probe_level, "probe level (default 1.0)");
}

void merge_flag(const CLI::App* cmd, const char* flag, json& cfg, const char* key,
                const json& value) {
  if (cmd->count(flag) > 0) cfg[key] = value;
}

void merge_common(const CLI::App* cmd, const CliState& st, json& cfg) {
  merge_flag(cmd, "--seed", cfg, "seed", st.seed);
  merge_flag(cmd, "--n", cfg, "n", st.n);
  merge_flag(cmd, "--out", cfg, "out", st.out_dir);
  merge_flag(cmd, "--threads", cfg, "threads", st.threads);
  merge_flag(cmd, "--format", cfg, "format", st.format);
}

void merge_model_flags(const CLI::App* cmd, const CliState& st, json& cfg) {
  merge_flag(cmd, "--model", cfg, "model", st.model);
  merge_flag(cmd, "--radius", cfg, "radius", st.radius);
  merge_flag(cmd, "--height", cfg, "height", st.height);
  merge_flag(cmd, "--lo", cfg, "lo", st.lo);
  merge_flag(cmd, "--hi", cfg, "hi", st.hi);
  merge_flag(cmd, "--res", cfg, "res", st.res);
}

void merge_probe_flags(const CLI::App* cmd, const CliState& st, json& cfg) {
  merge_flag(cmd, "--probe-a", cfg, "probe_a", st.probe_a);
  merge_flag(cmd, "--probe-b", cfg, "probe_b", st.probe_b);
  merge_flag(cmd, "--probe-level", cfg, "probe_level", st.probe_level);
}

// One run's state: resolved config, manifest extras, and the report under
// construction.  The manifest is written last so it can carry the wall time;
// every other artifact is byte-reproducible from (config, seed, version).
struct Run {
  std::string command;
  fs::path out_dir;
  json config;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string format;
  json extra = json::object();
  json report = json::object();
  std::string csv;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

Run make_run(const char* command, const CLI::App* cmd, const CliState& st, json cfg) {
  if (cmd->count("--seed") == 0 && !cfg.contains("seed")) {
    if (const char* env = std::getenv("USCX_SEED")) {
      cfg["seed"] = parse_u64(env, "USCX_SEED");
    } else {
      cfg["seed"] = std::uint64_t{0};
    }
  }
  const json& seed_json = cfg.at("seed");
  const bool seed_ok =
      seed_json.is_number_unsigned() ||
      (seed_json.is_number_integer() && seed_json.get<std::int64_t>() >= 0);
  if (!seed_ok) throw std::invalid_argument("seed must be a nonnegative integer");
  if (!cfg.contains("out")) cfg["out"] = "uscx_out";
  if (!cfg.at("out").is_string()) throw std::invalid_argument("out must be a string");
  if (!cfg.contains("threads")) cfg["threads"] = 1;
  const int threads = cfg.at("threads").get<int>();
  if (threads < 1) throw std::invalid_argument("thread count must be positive");
  if (!cfg.contains("format")) cfg["format"] = "json";
  const std::string format = cfg.at("format").get<std::string>();
  if (format != "json" && format != "csv") {
    throw std::invalid_argument("format must be json or csv");
  }

  Run run;
  run.command = command;
  run.out_dir = fs::path(cfg.at("out").get<std::string>());
  run.seed = cfg.at("seed").get<std::uint64_t>();
  run.threads = threads;
  run.format = format;
  run.config = std::move(cfg);
  fs::create_directories(run.out_dir);
  return run;
}

// Writes report.{json,csv} plus manifest.json and prints the report bytes.
int emit(Run& run, std::ostream& out, int code) {
  std::string text;
  std::string file;
  if (run.format == "csv") {
    text = "# manifest: manifest.json\n" + run.csv;
    file = "report.csv";
  } else {
    run.report["manifest"] = "manifest.json";
    text = run.report.dump(2) + "\n";
    file = "report.json";
  }
  write_text_file(run.out_dir / file, text);
  out << text;

  const auto wall = std::chrono::steady_clock::now() - run.start;
  // The output directory is where the manifest itself lives, not an
  // experiment input; leaving it out keeps manifests byte-comparable
  // across runs that differ only in their destination.
  json recorded = run.config;
  recorded.erase("out");
  json manifest{{"command", run.command},
                {"version", kCliVersion},
                {"seed", run.seed},
                {"config", std::move(recorded)}};
  for (const auto& [key, value] : run.extra.items()) manifest[key] = value;
  manifest["wall_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(wall).count();
  write_text_file(run.out_dir / "manifest.json", manifest.dump(2) + "\n");
  return code;
}

Domain resolve_domain(const json& cfg) {
  if (cfg.contains("domain")) {
    if (cfg.contains("lo") || cfg.contains("hi") || cfg.contains("res")) {
      throw std::invalid_argument("config has both a domain object and lo/hi/res");
    }
    return domain_from_json(cfg.at("domain"));
  }
  return Domain::make1d(cfg.value("lo", 0.0), cfg.value("hi", 1.0),
                        cfg.value("res", 33));
}

std::vector<StairStep> parse_steps(const json& steps_json) {
  std::vector<StairStep> steps;
  for (const json& entry : steps_json) {
    StairStep step;
    step.width = entry.value("width", 1.0);
    step.value = entry.value("value", 1.0);
    step.closed_left = entry.value("closed_left", true);
    steps.push_back(step);
  }
  return steps;
}

void reject_model_keys(const json& cfg, std::initializer_list<const char*> unused,
                       const std::string& family) {
  for (const char* key : unused) {
    if (cfg.contains(key)) {
      throw std::invalid_argument("model " + family + " does not take " + key);
    }
  }
}

// Builds the spectral model from either an inline model object (which
// carries its own domain) or a family name plus domain keys, records the
// resolved form in the manifest, and strips the building keys from the
// config copy so the record stays canonical.
SpectralModel resolve_model(json& cfg, Run& run) {
  const json mj = cfg.contains("model") ? cfg.at("model") : json("constant_one");
  SpectralModel model = [&] {
    if (mj.is_object()) {
      if (cfg.contains("domain") || cfg.contains("lo") || cfg.contains("hi") ||
          cfg.contains("res")) {
        throw std::invalid_argument("a model object already carries its domain");
      }
      reject_model_keys(cfg, {"radius", "height", "steps"}, "object");
      return model_from_json(mj);
    }
    if (!mj.is_string()) {
      throw std::invalid_argument("model must be a family name or an object");
    }
    const std::string name = mj.get<std::string>();
    const Domain domain = resolve_domain(cfg);
    if (name == "constant_one") {
      reject_model_keys(cfg, {"radius", "height", "steps"}, name);
      return SpectralModel::constant_one(domain);
    }
    if (name == "storm") {
      reject_model_keys(cfg, {"steps"}, name);
      return SpectralModel::storm(domain, cfg.value("radius", 0.25),
                                  cfg.value("height", 1.0));
    }
    if (name == "staircase") {
      reject_model_keys(cfg, {"radius", "height"}, name);
      if (!cfg.contains("steps")) {
        throw std::invalid_argument("staircase needs steps in the config");
      }
      return SpectralModel::staircase(domain, parse_steps(cfg.at("steps")));
    }
    throw std::invalid_argument("unknown spectral family");
  }();
  for (const char* key : {"model", "domain", "lo", "hi", "res", "radius", "height", "steps"}) {
    cfg.erase(key);
  }
  run.extra["model"] = model_to_json(model);
  run.extra["domain"] = domain_to_json(model.domain());
  return model;
}

CompactProbe make_box_probe(const Domain& d, double a, double b, double level) {
  const Box box = d.dim() == 1 ? Box::interval(a, b) : Box::rect(a, b, d.lo(1), d.hi(1));
  return CompactProbe{{ProbePart{box, level}}};
}

// Node-aligned four-probe suite spanning the domain: full box, middle half,
// center point, and a two-part probe with distinct levels.
std::vector<CompactProbe> default_probe_suite(const Domain& d) {
  const int last = d.res(0) - 1;
  const double lo = d.coord(0, 0);
  const double hi = d.coord(0, last);
  const double q1 = d.coord(0, last / 4);
  const double q3 = d.coord(0, (3 * last) / 4);
  const double mid = d.coord(0, last / 2);
  CompactProbe split;
  split.parts.push_back(make_box_probe(d, lo, q1, 1.0).parts[0]);
  split.parts.push_back(make_box_probe(d, q3, hi, 2.0).parts[0]);
  return {make_box_probe(d, lo, hi, 1.0), make_box_probe(d, q1, q3, 1.5),
          make_box_probe(d, mid, mid, 1.0), split};
}

std::vector<CompactProbe> resolve_probes(json& cfg, const Domain& d, bool default_suite) {
  const bool flagged = cfg.contains("probe_a") || cfg.contains("probe_b") ||
                       cfg.contains("probe_level");
  std::vector<CompactProbe> probes;
  if (cfg.contains("probes")) {
    if (flagged) {
      throw std::invalid_argument("config has both probes and probe_a/probe_b/probe_level");
    }
    for (const json& pj : cfg.at("probes")) probes.push_back(probe_from_json(pj));
    if (probes.empty()) throw std::invalid_argument("probes must be a nonempty array");
  } else if (flagged) {
    probes.push_back(make_box_probe(d, cfg.value("probe_a", d.lo(0)),
                                    cfg.value("probe_b", d.hi(0)),
                                    cfg.value("probe_level", 1.0)));
  } else if (default_suite) {
    probes = default_probe_suite(d);
  } else {
    probes.push_back(make_box_probe(d, d.lo(0), d.hi(0), 1.0));
  }
  json pj = json::array();
  for (const CompactProbe& probe : probes) pj.push_back(probe_to_json(probe, d.dim()));
  cfg["probes"] = std::move(pj);
  for (const char* key : {"probe_a", "probe_b", "probe_level"}) cfg.erase(key);
  return probes;
}

std::int64_t sample_count(const json& cfg, std::int64_t fallback) {
  const std::int64_t n = cfg.value("n", fallback);
  if (n < 0) throw std::invalid_argument("n must be nonnegative");
  return n;
}

// z for an empirical proportion against a known target.
double agreement_z(double hit, double target, std::int64_t n) {
  const double var = target * (1.0 - target) / static_cast<double>(n);
  if (var <= 0.0) {
    if (hit == target) return 0.0;
    return hit > target ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
  }
  return (hit - target) / std::sqrt(var);
}

const char* family_name(const SpectralModel& model) {
  switch (model.family()) {
    case SpectralModel::Family::constant_one: return "constant_one";
    case SpectralModel::Family::storm: return "storm";
    case SpectralModel::Family::staircase: return "staircase";
  }
  return "unknown";
}

int cmd_simulate(const CLI::App* cmd, CliState& st) {
  json cfg = load_config(st.config_path);
  merge_common(cmd, st, cfg);
  merge_model_flags(cmd, st, cfg);
  check_keys(cfg, {"seed", "n", "out", "threads", "format", "model", "domain", "lo",
                   "hi", "res", "radius", "height", "steps"});
  Run run = make_run("simulate", cmd, st, std::move(cfg));
  const SpectralModel model = resolve_model(run.config, run);
  const std::int64_t count = sample_count(run.config, 1);
  if (count < 1) throw std::invalid_argument("need at least one field");
  run.config["n"] = count;

  const MaxStableSampler sampler(model, run.seed);
  json results = json::array();
  std::ostringstream rows;
  double atoms_total = 0.0;
  for (std::int64_t i = 0; i < count; ++i) {
    SimulateStats stats;
    const GridField field =
        simulate_simple(sampler, stream_seed(run.seed, static_cast<std::uint64_t>(i)),
                        &stats);
    std::ostringstream name;
    name << "field_" << std::setw(4) << std::setfill('0') << i << ".csv";
    write_field_csv(run.out_dir / name.str(), field, "manifest: manifest.json");
    results.push_back({{"index", i}, {"file", name.str()}, {"atoms", stats.atoms}});
    rows << i << "," << name.str() << "," << stats.atoms << "\n";
    atoms_total += static_cast<double>(stats.atoms);
  }
  const double atoms_mean = atoms_total / static_cast<double>(count);
  run.extra["n_samples"] = count;
  run.extra["atoms_mean"] = atoms_mean;
  run.extra["results"] = results;
  run.report = {{"command", "simulate"},
                {"family", family_name(model)},
                {"n_samples", count},
                {"atoms_mean", atoms_mean},
                {"results", results}};
  run.csv = "index,file,atoms\n" + rows.str();
  return emit(run, st.out, kOk);
}

int cmd_capacity(const CLI::App* cmd, CliState& st) {
  json cfg = load_config(st.config_path);
  merge_common(cmd, st, cfg);
  merge_model_flags(cmd, st, cfg);
  merge_probe_flags(cmd, st, cfg);
  merge_flag(cmd, "--n-expectation", cfg, "n_expectation", st.n_expectation);
  merge_flag(cmd, "--z-threshold", cfg, "z_threshold", st.z_threshold);
  check_keys(cfg, {"seed", "n", "out", "threads", "format", "model", "domain", "lo",
                   "hi", "res", "radius", "height", "steps", "probes", "probe_a",
                   "probe_b", "probe_level", "n_expectation", "z_threshold"});
  Run run = make_run("capacity", cmd, st, std::move(cfg));
  const SpectralModel model = resolve_model(run.config, run);
  const std::vector<CompactProbe> probes =
      resolve_probes(run.config, model.domain(), false);
  const std::int64_t n = sample_count(run.config, 0);
  run.config["n"] = n;
  const std::int64_t n_expectation = run.config.value("n_expectation", std::int64_t{100000});
  if (n_expectation < 0) throw std::invalid_argument("n_expectation must be nonnegative");
  run.config["n_expectation"] = n_expectation;
  const double z_threshold = run.config.value("z_threshold", 4.0);
  run.config["z_threshold"] = z_threshold;

  const MaxStableSampler sampler(model, run.seed);
  json results = json::array();
  std::ostringstream rows;
  double atoms_total = 0.0;
  bool gate_failed = false;
  for (std::size_t j = 0; j < probes.size(); ++j) {
    const double miss = capacity_closed_form(
        model, probes[j], static_cast<std::size_t>(n_expectation),
        stream_seed(run.seed, 2 * j));
    json row{{"probe", probe_to_json(probes[j], model.domain().dim())},
             {"miss_closed", miss},
             {"hit_closed", 1.0 - miss}};
    rows << j << "," << probes[j].parts.size() << "," << fmt(miss) << ","
         << fmt(1.0 - miss);
    if (n > 0) {
      const CapacityEstimate est = capacity_empirical(
          sampler, probes[j], static_cast<std::size_t>(n),
          stream_seed(run.seed, 2 * j + 1), run.threads);
      const double z = agreement_z(est.hit_rate, 1.0 - miss, n);
      row["hit_rate"] = est.hit_rate;
      row["halfwidth_95"] = est.halfwidth_95;
      row["atoms_mean"] = est.atoms_mean;
      row["z"] = json_num(z);
      rows << "," << fmt(est.hit_rate) << "," << fmt(est.halfwidth_95) << ","
           << fmt(z);
      atoms_total += est.atoms_mean;
      gate_failed = gate_failed || !(std::abs(z) < z_threshold);
    }
    rows << "\n";
    results.push_back(std::move(row));
  }
  run.extra["n_samples"] = n;
  run.extra["atoms_mean"] =
      n > 0 ? atoms_total / static_cast<double>(probes.size()) : 0.0;
  run.extra["results"] = results;
  run.report = {{"command", "capacity"},
                {"family", family_name(model)},
                {"n_samples", n},
                {"probes", results}};
  run.csv = n > 0 ? "probe,parts,miss_closed,hit_closed,hit_rate,halfwidth_95,z\n"
                  : "probe,parts,miss_closed,hit_closed\n";
  run.csv += rows.str();
  return emit(run, st.out, gate_failed ? kStatistical : kOk);
}

int cmd_maxstab_check(const CLI::App* cmd, CliState& st) {
  json cfg = load_config(st.config_path);
  merge_common(cmd, st, cfg);
  merge_model_flags(cmd, st, cfg);
  merge_probe_flags(cmd, st, cfg);
  merge_flag(cmd, "--copies", cfg, "copies", st.copies);
  merge_flag(cmd, "--z-threshold", cfg, "z_threshold", st.z_threshold);
  if (cmd->count("--theta-file") > 0) {
    cfg["theta"] = json::parse(slurp_user_file(st.theta_file));
  }
  check_keys(cfg, {"seed", "n", "out", "threads", "format", "model", "domain", "lo",
                   "hi", "res", "radius", "height", "steps", "probes", "probe_a",
                   "probe_b", "probe_level", "copies", "z_threshold", "theta"});
  Run run = make_run("maxstab-check", cmd, st, std::move(cfg));
  const SpectralModel model = resolve_model(run.config, run);
  const std::vector<CompactProbe> probes =
      resolve_probes(run.config, model.domain(), true);
  const std::int64_t n = sample_count(run.config, 10000);
  if (n < 1) throw std::invalid_argument("need at least one sample");
  run.config["n"] = n;
  const double z_threshold = run.config.value("z_threshold", 4.0);
  run.config["z_threshold"] = z_threshold;

  std::vector<int> copies;
  const json cj = run.config.contains("copies") ? run.config.at("copies") : json(2);
  if (cj.is_array()) {
    for (const json& e : cj) copies.push_back(e.get<int>());
  } else {
    copies.push_back(cj.get<int>());
  }
  if (copies.empty()) throw std::invalid_argument("copies must be a nonempty list");
  run.config["copies"] = copies;

  std::optional<ThetaField> theta;
  if (run.config.contains("theta")) theta = theta_field_from_json(run.config.at("theta"));

  const MaxStableSampler sampler(model, run.seed);
  json results = json::array();
  std::ostringstream rows;
  double atoms_total = 0.0;
  bool gate_failed = false;
  for (std::size_t idx = 0; idx < copies.size(); ++idx) {
    const int m = copies[idx];
    const MaxStabilityReport report =
        theta ? destandardized_max_stability(sampler, *theta, m, probes,
                                             static_cast<std::size_t>(n),
                                             stream_seed(run.seed, idx), run.threads)
              : check_simple_max_stability(sampler, m, probes,
                                           static_cast<std::size_t>(n),
                                           stream_seed(run.seed, idx), run.threads);
    json probe_rows = json::array();
    for (std::size_t j = 0; j < report.probes.size(); ++j) {
      const ProbeStability& p = report.probes[j];
      probe_rows.push_back({{"probe", j},
                            {"p_maxfold", p.p_maxfold},
                            {"p_scaled", p.p_scaled},
                            {"z", json_num(p.z_score)},
                            {"p_single", p.p_single},
                            {"z_product", json_num(p.z_product)}});
      rows << m << "," << j << "," << fmt(p.p_maxfold) << "," << fmt(p.p_scaled)
           << "," << fmt(p.z_score) << "," << fmt(p.p_single) << ","
           << fmt(p.z_product) << "\n";
      gate_failed = gate_failed || !(std::abs(p.z_score) < z_threshold) ||
                    !(std::abs(p.z_product) < z_threshold);
    }
    results.push_back({{"copies", m},
                       {"atoms_mean", report.atoms_mean},
                       {"probes", std::move(probe_rows)}});
    atoms_total += report.atoms_mean;
  }
  run.extra["n_samples"] = n;
  run.extra["atoms_mean"] = atoms_total / static_cast<double>(copies.size());
  run.extra["results"] = results;
  run.report = {{"command", "maxstab-check"},
                {"family", family_name(model)},
                {"destandardized", theta.has_value()},
                {"n_samples", n},
                {"z_threshold", z_threshold},
                {"passed", !gate_failed},
                {"results", results}};
  run.csv = "copies,probe,p_maxfold,p_scaled,z,p_single,z_product\n" + rows.str();
  return emit(run, st.out, gate_failed ? kStatistical : kOk);
}

int cmd_sklar(const CLI::App* cmd, CliState& st) {
  json cfg = load_config(st.config_path);
  merge_common(cmd, st, cfg);
  merge_flag(cmd, "--direction", cfg, "direction", st.direction);
  merge_flag(cmd, "--input", cfg, "input", st.input);
  merge_flag(cmd, "--output", cfg, "output", st.output);
  if (cmd->count("--family-file") > 0) {
    cfg["family"] = json::parse(slurp_user_file(st.family_file));
  }
  if (cmd->count("--theta-file") > 0) {
    cfg["theta"] = json::parse(slurp_user_file(st.theta_file));
  }
  check_keys(cfg, {"seed", "n", "out", "threads", "format", "direction", "input",
                   "output", "family", "theta"});
  Run run = make_run("sklar", cmd, st, std::move(cfg));
  const std::string direction = run.config.value("direction", std::string());
  const std::string input = run.config.value("input", std::string());
  if (input.empty()) throw std::invalid_argument("sklar needs an input field file");
  const GridField field = load_field(input);

  const GridField result = [&] {
    if (direction == "forward" || direction == "backward") {
      if (!run.config.contains("family")) {
        throw std::invalid_argument("sklar " + direction + " needs a marginal family");
      }
      const MarginalFamily family = family_from_json(run.config.at("family"));
      return direction == "forward" ? sklar_forward(family, field)
                                    : sklar_backward(family, field);
    }
    if (direction == "standardize" || direction == "destandardize") {
      if (!run.config.contains("theta")) {
        throw std::invalid_argument("sklar " + direction + " needs a theta field");
      }
      const ThetaField theta = theta_field_from_json(run.config.at("theta"));
      return direction == "standardize" ? gev_standardize(theta, field)
                                        : gev_destandardize(theta, field);
    }
    throw std::invalid_argument("unknown sklar direction");
  }();

  const std::string output = run.config.value("output", std::string("transformed.csv"));
  run.config["output"] = output;
  write_field_csv(run.out_dir / output, result, "manifest: manifest.json");
  run.extra["results"] = json::array({json{{"file", output}}});
  run.report = {{"command", "sklar"},
                {"direction", direction},
                {"input", input},
                {"output", output},
                {"nodes", result.values.size()}};
  run.csv = "direction,input,output,nodes\n" + direction + "," + input + "," +
            output + "," + std::to_string(result.values.size()) + "\n";
  return emit(run, st.out, kOk);
}

int cmd_gallery(const CLI::App* cmd, CliState& st) {
  json cfg = load_config(st.config_path);
  merge_common(cmd, st, cfg);
  merge_flag(cmd, "--entry", cfg, "entry", st.entry);
  check_keys(cfg, {"seed", "n", "out", "threads", "format", "entry"});
  Run run = make_run("gallery", cmd, st, std::move(cfg));
  const std::string entry = run.config.value("entry", std::string());
  if (entry.empty()) throw std::invalid_argument("gallery needs an entry id");
  const std::int64_t n = sample_count(run.config, 10000);
  run.config["n"] = n;

  const std::vector<std::string> ids =
      entry == "all" ? gallery_ids() : std::vector<std::string>{entry};
  json records = json::array();
  std::ostringstream rows;
  for (const std::string& id : ids) {
    const json record = gallery_record(gallery_entry(id), n, run.seed);
    rows << id << "," << n << "," << run.seed << ","
         << fmt(record.at("estimate").get<double>()) << ","
         << fmt(record.at("halfwidth").get<double>()) << "\n";
    records.push_back(record);
  }
  run.extra["n_samples"] = n;
  run.extra["results"] = records;
  run.report = {{"command", "gallery"}, {"records", records}};
  if (ids.size() == 1) {
    run.report["estimate"] = records[0].at("estimate");
    run.report["halfwidth"] = records[0].at("halfwidth");
  }
  run.csv = "entry,n_samples,seed,estimate,halfwidth\n" + rows.str();
  return emit(run, st.out, kOk);
}

int cmd_gevfit(const CLI::App* cmd, CliState& st) {
  json cfg = load_config(st.config_path);
  merge_common(cmd, st, cfg);
  merge_flag(cmd, "--q", cfg, "q", st.q);
  merge_flag(cmd, "--p1", cfg, "p1", st.p1);
  merge_flag(cmd, "--q1", cfg, "q1", st.q1);
  merge_flag(cmd, "--p2", cfg, "p2", st.p2);
  merge_flag(cmd, "--q2", cfg, "q2", st.q2);
  check_keys(cfg, {"seed", "n", "out", "threads", "format", "q", "p1", "q1", "p2", "q2"});
  Run run = make_run("gevfit", cmd, st, std::move(cfg));
  if (!run.config.contains("q") || !run.config.contains("q1") ||
      !run.config.contains("q2")) {
    throw std::invalid_argument("gevfit needs q, q1, and q2");
  }
  const double q = run.config.at("q").get<double>();
  const double p1 = run.config.value("p1", 0.25);
  const double q1 = run.config.at("q1").get<double>();
  const double p2 = run.config.value("p2", 0.75);
  const double q2 = run.config.at("q2").get<double>();
  run.config["p1"] = p1;
  run.config["p2"] = p2;

  const GevParams theta = params_from_quantiles(q, q1, q2, p1, p2);
  run.extra["results"] = json::array({json{
      {"gamma", theta.gamma}, {"mu", theta.mu}, {"sigma", theta.sigma}}});
  run.report = {{"command", "gevfit"}, {"gamma", theta.gamma}, {"mu", theta.mu},
                {"sigma", theta.sigma}, {"q", q},  {"p1", p1},
                {"q1", q1},             {"p2", p2}, {"q2", q2}};
  run.csv = "gamma,mu,sigma\n" + fmt(theta.gamma) + "," + fmt(theta.mu) + "," +
            fmt(theta.sigma) + "\n";
  return emit(run, st.out, kOk);
}

struct HypoInput {
  std::vector<GridField> seq;
  GridField limit;
};

// Canonical demonstration sequences on the 65-node unit grid: a constant
// sequence, a unit spike drifting to the origin (hypo-converges to the spike
// limit), and the same drift with growing height (fails the upper branch).
HypoInput builtin_sequence(const std::string& name) {
  const Domain d = Domain::make1d(0.0, 1.0, 65);
  if (name == "constant") {
    GridField z(d);
    for (int i = 0; i < d.res(0); ++i) z.at(i) = ExtReal(std::sin(3.0 * d.coord(0, i)));
    return {std::vector<GridField>(10, z), z};
  }
  if (name == "moving_spike" || name == "growing_spike") {
    const bool growing = name == "growing_spike";
    std::vector<GridField> seq;
    for (int n = 1; n <= 64; ++n) {
      GridField f(d, ExtReal(0.0));
      const int idx = static_cast<int>(std::lround(1.0 / n / d.step(0)));
      f.at(idx) = ExtReal(growing ? static_cast<double>(n) : 1.0);
      seq.push_back(std::move(f));
    }
    GridField limit(d, ExtReal(0.0));
    limit.at(0) = ExtReal(1.0);
    return {std::move(seq), std::move(limit)};
  }
  throw std::invalid_argument("unknown builtin sequence");
}

int cmd_hypoconv(const CLI::App* cmd, CliState& st) {
  json cfg = load_config(st.config_path);
  merge_common(cmd, st, cfg);
  merge_flag(cmd, "--builtin", cfg, "builtin", st.builtin);
  merge_flag(cmd, "--limit", cfg, "limit", st.limit_path);
  merge_flag(cmd, "--slack", cfg, "slack", st.slack);
  merge_flag(cmd, "--radius", cfg, "radius", st.ball_radius);
  if (cmd->count("sequence") > 0) cfg["sequence"] = st.sequence;
  check_keys(cfg, {"seed", "n", "out", "threads", "format", "builtin", "limit",
                   "sequence", "slack", "radius"});
  Run run = make_run("hypoconv", cmd, st, std::move(cfg));

  const bool has_builtin = run.config.contains("builtin");
  const bool has_files =
      run.config.contains("sequence") || run.config.contains("limit");
  if (has_builtin && has_files) {
    throw std::invalid_argument("hypoconv takes a builtin name or files, not both");
  }
  if (!has_builtin && !has_files) {
    throw std::invalid_argument("hypoconv needs a builtin name or sequence files");
  }

  HypoConvergesOptions opts;
  opts.slack = run.config.value("slack", 1e-9);
  opts.radius = run.config.value("radius", 2);
  run.config["slack"] = opts.slack;
  run.config["radius"] = opts.radius;

  const HypoInput input = [&] {
    if (has_builtin) {
      return builtin_sequence(run.config.at("builtin").get<std::string>());
    }
    if (!run.config.contains("sequence") || !run.config.contains("limit")) {
      throw std::invalid_argument("hypoconv needs both sequence files and a limit file");
    }
    HypoInput files{{}, load_field(run.config.at("limit").get<std::string>())};
    for (const json& path : run.config.at("sequence")) {
      files.seq.push_back(load_field(path.get<std::string>()));
    }
    return files;
  }();

  const HypoConvergesReport report = hypo_converges(input.seq, input.limit, opts);
  const char* verdict = report.verdict == HypoVerdict::pass ? "pass"
                        : report.verdict == HypoVerdict::fail_upper ? "fail_upper"
                                                                    : "fail_lower";
  run.extra["results"] = json::array({json{{"verdict", verdict},
                                           {"witness_node", report.witness_node},
                                           {"witness_seq_index", report.witness_seq_index}}});
  run.report = {{"command", "hypoconv"},
                {"verdict", verdict},
                {"witness_node", report.witness_node},
                {"witness_seq_index", report.witness_seq_index},
                {"sequence_length", input.seq.size()}};
  run.csv = "verdict,witness_node,witness_seq_index,sequence_length\n" +
            std::string(verdict) + "," + std::to_string(report.witness_node) + "," +
            std::to_string(report.witness_seq_index) + "," +
            std::to_string(input.seq.size()) + "\n";
  return emit(run, st.out, report.verdict == HypoVerdict::pass ? kOk : kStatistical);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CliState st{out};
  CLI::App app{"usc random fields: simulation, capacities, and max-stability checks"};
  app.set_version_flag("--version", kCliVersion);
  app.require_subcommand(1);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "draw max-stable fields and write them as CSV");
  add_common(simulate, st);
  add_model_flags(simulate, st);
  simulate->callback([&, simulate] { st.code = cmd_simulate(simulate, st); });

  CLI::App* capacity = app.add_subcommand(
      "capacity", "closed-form and empirical probe hit probabilities");
  add_common(capacity, st);
  add_model_flags(capacity, st);
  add_probe_flags(capacity, st);
  capacity->add_option("--n-expectation", st.n_expectation,
                       "spectral draws for sampled expectations (staircase)");
  capacity->add_option("--z-threshold", st.z_threshold,
                       "absolute z that fails the agreement gate");
  capacity->callback([&, capacity] { st.code = cmd_capacity(capacity, st); });

  CLI::App* maxstab = app.add_subcommand(
      "maxstab-check", "max-stability z-score report over probe capacities");
  add_common(maxstab, st);
  add_model_flags(maxstab, st);
  add_probe_flags(maxstab, st);
  maxstab->add_option("--copies", st.copies, "number of independent copies n");
  maxstab->add_option("--z-threshold", st.z_threshold,
                      "absolute z that fails the check");
  maxstab->add_option("--theta-file", st.theta_file,
                      "theta field JSON for the destandardized check");
  maxstab->callback([&, maxstab] { st.code = cmd_maxstab_check(maxstab, st); });

  CLI::App* sklar = app.add_subcommand(
      "sklar", "apply marginal standardization maps to a field file");
  add_common(sklar, st);
  sklar->add_option("--direction", st.direction,
                    "forward, backward, standardize, or destandardize");
  sklar->add_option("--input", st.input, "input field CSV");
  sklar->add_option("--output", st.output, "output field file name");
  sklar->add_option("--family-file", st.family_file, "marginal family JSON file");
  sklar->add_option("--theta-file", st.theta_file, "theta field JSON file");
  sklar->callback([&, sklar] { st.code = cmd_sklar(sklar, st); });

  CLI::App* gallery = app.add_subcommand(
      "gallery", "run a counterexample scenario and report its rates");
  add_common(gallery, st);
  gallery->add_option("--entry", st.entry, "entry id, or 'all'");
  gallery->callback([&, gallery] { st.code = cmd_gallery(gallery, st); });

  CLI::App* gevfit = app.add_subcommand(
      "gevfit", "recover GEV parameters from three quantile values");
  add_common(gevfit, st);
  gevfit->add_option("--q", st.q, "quantile value at p = 1/e (equals mu)");
  gevfit->add_option("--p1", st.p1, "first probe probability (default 0.25)");
  gevfit->add_option("--q1", st.q1, "quantile value at p1");
  gevfit->add_option("--p2", st.p2, "second probe probability (default 0.75)");
  gevfit->add_option("--q2", st.q2, "quantile value at p2");
  gevfit->callback([&, gevfit] { st.code = cmd_gevfit(gevfit, st); });

  CLI::App* hypoconv = app.add_subcommand(
      "hypoconv", "check hypo-convergence of a field sequence to a limit");
  add_common(hypoconv, st);
  hypoconv->add_option("--builtin", st.builtin,
                       "constant, moving_spike, or growing_spike");
  hypoconv->add_option("--limit", st.limit_path, "limit field CSV");
  hypoconv->add_option("sequence", st.sequence, "sequence field CSVs in order");
  hypoconv->add_option("--slack", st.slack, "additive comparison tolerance");
  hypoconv->add_option("--radius", st.ball_radius, "neighborhood radius in grid steps");
  hypoconv->callback([&, hypoconv] { st.code = cmd_hypoconv(hypoconv, st); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "uscx: config error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    err << "uscx: " << e.what() << "\n";
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    err << "uscx: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "uscx: internal error: " << e.what() << "\n";
    return kInternal;
  }
  return st.code;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace uscx
