#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeform/common.hpp"

namespace edgeform {

inline constexpr const char* kTrajectoryHeader =
    "t,node_id,kind,x,y,z,ref_x,ref_y,ref_z,edge_err_norm";

inline constexpr const char* kSupervisionHeader =
    "t,k,mode,verdict,jump_norm,e_minus_norm,e_plus_norm,reinitialized,identity_residual,"
    "graph_changed,edge_count,lambda_min_plus,incidence_norm,interval_edge_changes,"
    "max_range_residual,max_control_gap,empty_neighbor_ticks,max_e_norm";

struct EventRecord {
  double t = 0.0;
  long seq = 0;
  std::string kind;
  nlohmann::json payload = nlohmann::json::object();

  nlohmann::json to_json() const;
  static EventRecord from_json(const nlohmann::json& j);
};

/// Append-only event list ordered by (t, seq).
class EventLog {
 public:
  const EventRecord& append(double t, std::string kind, nlohmann::json payload = nlohmann::json::object());
  const std::vector<EventRecord>& records() const { return records_; }
  std::vector<EventRecord> since(long seq) const;
  long next_seq() const { return next_seq_; }
  std::string to_jsonl() const;
  static EventLog from_jsonl(const std::string& text);

 private:
  std::vector<EventRecord> records_;
  long next_seq_ = 0;
};

struct TrajectoryRow {
  double t = 0.0;
  int node_id = 0;
  bool drone = true;
  Vec3 pos = Vec3::Zero();
  Vec3 ref = Vec3::Zero();  ///< meaningful for drones only
  double edge_err_norm = 0.0;
};

std::string format_trajectory_row(const TrajectoryRow& row);
/// Parses a trajectory CSV (header included). Throws StructuralError on bad rows.
std::vector<TrajectoryRow> parse_trajectory_csv(const std::string& text);

/// One row per supervision instant; interval fields describe [t_k, t_{k+1}).
struct SupervisionRow {
  double t = 0.0;
  int k = 0;
  std::string mode;
  std::string verdict;
  double jump_norm = 0.0;
  double e_minus_norm = 0.0;
  double e_plus_norm = 0.0;
  bool reinitialized = false;
  double identity_residual = 0.0;
  bool graph_changed = false;  ///< edge set differs from the previous supervision instant
  int edge_count = 0;
  double lambda_min_plus = 0.0;
  double incidence_norm = 0.0;
  int interval_edge_changes = 0;
  double max_range_residual = 0.0;
  double max_control_gap = 0.0;
  int empty_neighbor_ticks = 0;
  double max_e_norm = 0.0;
};

std::string format_supervision_row(const SupervisionRow& row);
std::vector<SupervisionRow> parse_supervision_csv(const std::string& text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace edgeform
