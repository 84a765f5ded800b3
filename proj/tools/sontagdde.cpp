// Command line front end: run, sweep-q, falsify, selftest.
//
// Exit codes: 0 success, 1 falsification / bound violation / divergence, 2 configuration error.
// Relative output paths are resolved against $SONTAGDDE_OUT_DIR when it is set.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "sontagdde/sontagdde.hpp"

namespace fs = std::filesystem;
using namespace sontagdde;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;

struct Overrides {
  std::optional<double> q;
  std::optional<double> horizon;
  std::optional<double> step;
  std::optional<double> settle;
  std::optional<std::string> mode;
  std::optional<long> seed;
  std::optional<long> samples;
  std::optional<std::string> out;
};

ExperimentConfig load(const std::string& path, const Overrides& o) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg = read_config(buf.str());
  auto& e = cfg.experiment;
  if (o.q) {
    if (!(*o.q > 0.0)) throw ConfigError("--q must be positive");
    e.q = *o.q;
  }
  if (o.horizon) e.horizon = *o.horizon;
  if (o.step) e.step = *o.step;
  if (o.settle) e.settle = *o.settle;
  if (o.mode) {
    auto m = parse_mode(*o.mode);
    if (!m) throw ConfigError("unknown mode '" + *o.mode + "'");
    e.mode = *m;
  }
  if (o.seed) {
    if (*o.seed < 0) throw ConfigError("--seed must be nonnegative");
    e.seed = static_cast<std::uint64_t>(*o.seed);
  }
  if (o.samples) {
    if (*o.samples < 1) throw ConfigError("--samples must be >= 1");
    e.samples = static_cast<std::size_t>(*o.samples);
  }
  if (o.out) e.out = *o.out;
  if (!(e.settle > 0.0 && e.settle < 1.0)) throw ConfigError("settle must lie in (0, 1)");
  return cfg;
}

fs::path output_path(const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) {
    if (const char* dir = std::getenv("SONTAGDDE_OUT_DIR"); dir != nullptr && *dir != '\0') path = fs::path(dir) / path;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  return path;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  os << content;
}

int cmd_run(const std::string& config, const Overrides& o) {
  const ExperimentConfig cfg = load(config, o);
  const RunOutcome r = run_experiment(cfg);
  if (!r.diverged) {
    const fs::path out = output_path(cfg.experiment.out);
    write_file(out, to_csv(r.trajectory));
    std::cout << "wrote " << out.string() << " (" << r.trajectory.size() << " rows)\n";
  }
  std::cout << summary_line(r) << "\n";
  return r.bound_ok() ? kExitOk : kExitViolation;
}

int cmd_sweep(const std::string& config, const Overrides& o) {
  const ExperimentConfig cfg = load(config, o);
  const auto rows = sweep_q(cfg);
  const std::string table = sweep_csv(rows);
  const fs::path out = output_path(o.out.value_or("sweep_q.csv"));
  write_file(out, table);
  std::cout << table;
  bool ok = true;
  for (const auto& r : rows) ok = ok && !r.diverged && r.residual_radius <= r.bound;
  return ok ? kExitOk : kExitViolation;
}

int cmd_falsify(const std::string& config, const Overrides& o) {
  const ExperimentConfig cfg = load(config, o);
  const HypothesisReport rep = falsify(cfg);
  std::cout << render_report(rep, *cfg.clkf);
  const fs::path out = output_path(o.out.value_or("counterexamples.csv"));
  write_file(out, witnesses_csv(rep));
  std::cout << "wrote " << out.string() << "\n";
  return rep.any_falsified() ? kExitViolation : kExitOk;
}

int cmd_selftest() {
  bool ok = true;
  for (const auto& c : run_selftest()) {
    std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name;
    if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
    std::cout << "\n";
    ok = ok && c.passed;
  }
  return ok ? kExitOk : kExitViolation;
}

void add_common(CLI::App* sub, std::string& config, Overrides& o) {
  sub->add_option("config", config, "Experiment file (system/clkf/experiment blocks)")->required();
  sub->add_option("--step", o.step, "Integration / sampling grid step");
  sub->add_option("--out", o.out, "Output CSV path");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sontag-type ISpS feedback synthesis and simulation for retarded systems"};
  app.require_subcommand(1);

  std::string config;
  Overrides o;

  auto* run = app.add_subcommand("run", "Simulate the closed loop and check the ISpS residual bound");
  add_common(run, config, o);
  run->add_option("--q", o.q, "ISS redesign gain");
  run->add_option("--horizon", o.horizon, "Simulation horizon");
  run->add_option("--mode", o.mode, "sontag-k | sontag-kr | kr-plus-iss | open-loop");
  run->add_option("--settle", o.settle, "Fraction of the horizon treated as transient");
  run->add_option("--seed", o.seed, "Seed (falsifier / random disturbances)");

  auto* sweep = app.add_subcommand("sweep-q", "Residual radius and bound for each q in the sweep list");
  add_common(sweep, config, o);
  sweep->add_option("--horizon", o.horizon, "Simulation horizon");
  sweep->add_option("--settle", o.settle, "Fraction of the horizon treated as transient");

  auto* fals = app.add_subcommand("falsify", "Search sampled segments for violations of the CLKF conditions");
  add_common(fals, config, o);
  fals->add_option("--seed", o.seed, "Sampler seed");
  fals->add_option("--samples", o.samples, "Number of sampled segments");

  auto* self = app.add_subcommand("selftest", "Run built-in sanity checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config, o);
    if (*sweep) return cmd_sweep(config, o);
    if (*fals) return cmd_falsify(config, o);
    if (*self) return cmd_selftest();
  } catch (const ParseError& e) {
    std::cerr << config << ":" << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const EvalError& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return kExitViolation;
  }
  return kExitConfig;
}
