// edgeform command line: run, certify, metrics, scenarios.

#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "edgeform/backend.hpp"
#include "edgeform/certify.hpp"
#include "edgeform/metrics.hpp"
#include "edgeform/scenario.hpp"
#include "edgeform/station.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace edgeform;

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

void on_signal(int) { g_interrupted = 1; }

struct RunArgs {
  std::string scenario;
  std::string config_file;
  bool headless = false;
  std::string serve;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> check_interval;
  std::optional<double> duration;
  std::string backend = "rule";
  std::string replay;
  std::string out;
  double time_scale = 1.0;
  bool paused = false;
};

ScenarioConfig load_config(const RunArgs& a) {
  ScenarioConfig cfg;
  if (!a.config_file.empty()) {
    cfg = config_from_json(json::parse(read_file(a.config_file)));
  } else {
    cfg = builtin_scenario(a.scenario);
  }
  if (a.seed) cfg.seed = *a.seed;
  if (a.dt) cfg.dt = *a.dt;
  if (a.check_interval) cfg.check_interval = *a.check_interval;
  if (a.duration) cfg.duration = *a.duration;
  cfg.validate();
  return cfg;
}

std::pair<std::string, unsigned short> split_address(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) return {s.empty() ? "127.0.0.1" : s, 8765};
  const std::string host = colon == 0 ? "127.0.0.1" : s.substr(0, colon);
  const int port = std::stoi(s.substr(colon + 1));
  if (port < 0 || port > 65535) throw ParameterError(fmt::format("port {} out of range", port));
  return {host, static_cast<unsigned short>(port)};
}

int cmd_run(const RunArgs& a) {
  const ScenarioConfig cfg = load_config(a);
  auto backend = make_backend(a.backend, a.replay);
  const fs::path out = a.out.empty() ? fs::path("runs") / cfg.name : fs::path(a.out);

  if (a.headless || a.serve.empty()) {
    Mission m(cfg, backend);
    m.run_to_end();
    m.write_logs(out);
    fmt::print("{}: {} ticks, {} supervision rows, {} events -> {}\n", cfg.name, m.ticks_done(),
               m.supervision_rows().size(), m.events().records().size(), out.string());
    return 0;
  }

  StationOptions opts;
  std::tie(opts.address, opts.port) = split_address(a.serve);
  opts.time_scale = a.time_scale;
  opts.start_paused = a.paused;
  opts.out_dir = out;
  ControlStation station(cfg, backend, opts);
  const unsigned short port = station.start();
  fmt::print("serving {} on ws://{}:{}/\n", cfg.name, opts.address, port);
  std::fflush(stdout);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!station.wait_for(std::chrono::milliseconds(200)))
    if (g_interrupted) break;
  station.shutdown();
  fmt::print("{} finished -> {}\n", cfg.name, out.string());
  return 0;
}

int cmd_certify(const std::string& dir, std::optional<double> slack) {
  const BoundReport report = certify_directory(dir, slack);
  write_file(fs::path(dir) / "bounds.csv", report.csv());
  write_file(fs::path(dir) / "bounds.json", report.summary().dump(2) + "\n");
  fmt::print("{} intervals: {} certified, {} flagged, {} violations, {} jump violations\n",
             report.intervals.size(), report.certified, report.flagged, report.violations,
             report.jump_violations);
  if (report.horizon.applicable)
    fmt::print("horizon: measured {:.4g} <= bound {:.4g} (margin {:.4g})\n",
               report.horizon.measured_average, report.horizon.finite_bound, report.horizon.margin);
  fmt::print("{}\n", report.pass ? "PASS" : "FAIL");
  return report.pass ? 0 : 1;
}

int cmd_metrics(const std::string& dir) {
  const ScenarioConfig cfg = config_from_json(json::parse(read_file(fs::path(dir) / "config.json")));
  const MissionMetrics m =
      compute_metrics(parse_trajectory_csv(read_file(fs::path(dir) / "trajectory.csv")),
                      EventLog::from_jsonl(read_file(fs::path(dir) / "events.jsonl")), cfg.num_drones);
  const json j = metrics_to_json(m);
  write_file(fs::path(dir) / "metrics.json", j.dump(2) + "\n");
  fmt::print("{}\n", j.dump(2));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgeform: supervised drone swarm formation control"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "run a built-in scenario or a config file");
  run->add_option("scenario", ra.scenario, "built-in scenario name (see `edgeform scenarios`)");
  run->add_option("--config", ra.config_file, "scenario config JSON instead of a built-in name")
      ->check(CLI::ExistingFile);
  run->add_flag("--headless", ra.headless, "run to completion without the control station");
  run->add_option("--serve", ra.serve, "serve the control station on HOST:PORT");
  run->add_option("--seed", ra.seed, "override the scenario seed");
  run->add_option("--dt", ra.dt, "integration step [s]");
  run->add_option("--check-interval", ra.check_interval, "supervision interval [s]");
  run->add_option("--duration", ra.duration, "mission length [s]");
  run->add_option("--backend", ra.backend, "supervisor backend")
      ->check(CLI::IsMember({"rule", "llm", "replay"}));
  run->add_option("--replay", ra.replay, "record (llm) or replay file of model exchanges");
  run->add_option("--out", ra.out, "output directory (default runs/<scenario>)");
  run->add_option("--time-scale", ra.time_scale, "simulated seconds per wall second when serving");
  run->add_flag("--paused", ra.paused, "start the served mission paused");

  std::string cert_dir;
  std::optional<double> slack;
  auto* cert = app.add_subcommand("certify", "check a run directory against the interval bounds");
  cert->add_option("run_dir", cert_dir)->required()->check(CLI::ExistingDirectory);
  cert->add_option("--slack-constant", slack, "C in the C*dt allowance (default: from config)");

  std::string metrics_dir;
  auto* met = app.add_subcommand("metrics", "mission metrics of a run directory");
  met->add_option("run_dir", metrics_dir)->required()->check(CLI::ExistingDirectory);

  auto* list = app.add_subcommand("scenarios", "list built-in scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (ra.scenario.empty() && ra.config_file.empty())
        throw ParameterError("run needs a scenario name or --config");
      return cmd_run(ra);
    }
    if (*cert) return cmd_certify(cert_dir, slack);
    if (*met) return cmd_metrics(metrics_dir);
    if (*list) {
      for (const ScenarioConfig& c : builtin_scenarios())
        fmt::print("{:<8} {:>3} drones {:>2} targets {:>6.1f} s\n", c.name, c.num_drones, c.targets.size(),
                   c.duration);
      return 0;
    }
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const json::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
