#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeform/backend.hpp"
#include "edgeform/dynamics.hpp"
#include "edgeform/graph.hpp"
#include "edgeform/intent.hpp"
#include "edgeform/logs.hpp"
#include "edgeform/supervision.hpp"

namespace edgeform {

struct TargetSpec {
  std::string name;
  Eigen::VectorXd start;
  std::vector<TargetLeg> legs;
  bool landmark = false;  ///< always visible to every drone, never tracked or sought
};

/// Initial drone placement: explicit positions, or seeded scatter in a disc.
struct DroneScatter {
  Vec3 center = Vec3::Zero();
  double radius = 10.0;
  double z_min = 0.0;
  double z_max = 0.0;
};

struct ScheduledCommand {
  double time = 0.0;
  std::string text;
  std::optional<Intent> intent;
};

struct ScenarioConfig {
  std::string name = "custom";
  std::uint64_t seed = 42;
  int num_drones = 1;
  int dim = 3;
  std::optional<Points> initial_drones;
  DroneScatter scatter;
  std::vector<TargetSpec> targets;
  double observation_radius = 15.0;
  double check_interval = 1.0;
  double dt = 1e-3;
  double duration = 10.0;
  double log_interval = 0.1;
  DisturbanceModel disturbance;
  std::optional<Intent> initial_intent;
  std::vector<ScheduledCommand> commands;
  SupervisionParams supervision;  ///< observation radius, check interval and landmarks are synced on load
  std::optional<Box> default_search_region;
  double default_height = 5.0;
  double slack_constant = 1.0;  ///< C in the C*dt discretization allowance of online bound rows
  bool verify_every_tick = true;

  long steps_per_check() const;
  long steps_per_log() const;
  long total_ticks() const;
  NodeSet nodes() const;
  /// Throws ParameterError / StructuralError on inconsistent settings.
  void validate() const;
};

nlohmann::json config_to_json(const ScenarioConfig& config);
ScenarioConfig config_from_json(const nlohmann::json& j);

/// Per-interval online certificate: measured edge error against the ISS envelope.
struct OnlineBoundRow {
  int k = -1;
  double t_k = 0.0;
  double lambda = 0.0;
  double w_bar = 0.0;
  double e0 = 0.0;
  double max_e = 0.0;
  double min_slack = 0.0;  ///< min over samples of envelope - |e|
  bool flagged = false;    ///< edge set changed or no positive spectrum
  nlohmann::json to_json(double tolerance) const;
};

/// Tick-by-tick mission. Commands are queued and applied only at supervision
/// instants t_k = k * check_interval.
class Mission {
 public:
  Mission(ScenarioConfig config, std::shared_ptr<SupervisorBackend> backend);

  const ScenarioConfig& config() const { return config_; }
  bool finished() const { return tick_ >= total_ticks_; }
  long ticks_done() const { return tick_; }
  double time() const { return static_cast<double>(tick_) * config_.dt; }
  /// Next supervision instant not yet processed.
  double next_check_time() const;

  void tick();
  /// Ticks until the next supervision instant has been reached (or the run ends).
  void advance_check();
  void run_to_end();

  /// Queues a command; returns a ticket echoed in the command_applied /
  /// command_rejected events.
  long submit(std::string text);
  long submit(Intent intent);

  const SwarmState& state() const { return state_; }
  const ReferenceSignal& reference() const { return reference_; }
  const std::optional<Intent>& intent() const { return intent_; }
  const SupervisorMemory& memory() const { return memory_; }
  const std::optional<SearchStatus>& search() const { return search_; }
  const EventLog& events() const { return events_; }

  std::string trajectory_csv() const;
  std::string supervision_csv() const;
  const std::vector<SupervisionRow>& supervision_rows() const { return rows_; }
  std::optional<OnlineBoundRow> latest_bound_row() const { return last_bound_; }

  /// Self-contained view for network clients.
  nlohmann::json snapshot(long events_from_seq) const;

  void write_logs(const std::filesystem::path& dir) const;

 private:
  struct Pending {
    long ticket = -1;
    std::string text;
    std::optional<Intent> intent;
  };

  void supervise(long k);
  std::optional<Points> begin_intent(const Intent& intent, nlohmann::json& info);
  std::optional<Points> regular_check(std::string& verdict);
  void close_interval();
  void log_sample(const Points& edge_errors);

  ScenarioConfig config_;
  std::shared_ptr<SupervisorBackend> backend_;
  NodeSet nodes_;
  std::vector<TargetScript> scripts_;
  DisturbanceSampler sampler_;
  Rng search_rng_;

  long tick_ = 0;
  long total_ticks_ = 0;
  long spc_ = 1;
  long log_every_ = 1;
  SwarmState state_;
  ReferenceSignal reference_;
  InteractionGraph graph_;
  std::vector<Edge> previous_tick_edges_;
  std::vector<Edge> check_edges_;
  bool have_check_edges_ = false;
  std::optional<RangeProjector> projector_;
  std::vector<Edge> projector_edges_;

  std::optional<Intent> intent_;
  SupervisorMemory memory_;
  bool have_memory_ = false;
  std::optional<SearchStatus> search_;
  std::optional<Detection> latched_detection_;

  std::deque<Pending> queue_;
  std::size_t next_script_ = 0;
  long next_ticket_ = 0;

  EventLog events_;
  std::string trajectory_;
  std::string supervision_;
  std::vector<SupervisionRow> rows_;
  std::optional<SupervisionRow> open_row_;
  OnlineBoundRow bound_;
  std::optional<OnlineBoundRow> last_bound_;
};

struct RunResult {
  std::string trajectory_csv;
  std::string supervision_csv;
  std::string events_jsonl;
  std::vector<SupervisionRow> supervision_rows;
  EventLog events;
};

/// Headless run to completion.
RunResult run(const ScenarioConfig& config, std::shared_ptr<SupervisorBackend> backend);

/// Named fixtures: chase-1..3 and sar-1..3.
std::vector<ScenarioConfig> builtin_scenarios();
ScenarioConfig builtin_scenario(const std::string& name);

}  // namespace edgeform
