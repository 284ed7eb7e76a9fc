#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeform/graph.hpp"
#include "edgeform/logs.hpp"

namespace edgeform {

struct ScenarioConfig;

struct CertifyParams {
  NodeSet nodes;
  double observation_radius = 15.0;
  double dt = 1e-3;
  double check_interval = 1.0;
  double d_bar = 0.0;
  double slack_constant = 1.0;  ///< tolerance is slack_constant * dt
  double jump_tolerance = 1e-9;
};

CertifyParams certify_params(const ScenarioConfig& config);

/// One row per supervision interval [t_k, t_{k+1}).
struct IntervalReport {
  int k = 0;
  double t_k = 0.0;
  double t_end = 0.0;
  double lambda = 0.0;         ///< recomputed from logged positions at t_k
  double lambda_logged = 0.0;
  double w_bar = 0.0;
  double e0 = 0.0;             ///< recomputed |e(t_k+)|
  double max_e = 0.0;
  double min_slack = 0.0;      ///< min over samples of envelope - |e|
  double tolerance = 0.0;
  int samples = 0;
  bool flagged = false;
  std::string flag_reason;
  bool jump_checked = false;
  double jump_slack = 0.0;     ///< |e-| + |dz| - |e+| at t_k
  std::string status;          ///< pass, violation or flagged
};

struct HorizonSummary {
  bool applicable = false;  ///< no flagged interval, so the long-horizon assumptions hold
  int K = 0;
  double lambda_floor = 0.0;
  double jump_bound = 0.0;  ///< realized max |dz^r| over k >= 1
  double w_bar = 0.0;
  double eta0 = 0.0;
  double measured_average = 0.0;
  double finite_bound = 0.0;
  double asymptotic_bound = 0.0;
  double margin = 0.0;
};

struct BoundReport {
  std::vector<IntervalReport> intervals;
  HorizonSummary horizon;
  int certified = 0;
  int flagged = 0;
  int violations = 0;
  int jump_violations = 0;
  double dt = 0.0;
  double slack_constant = 0.0;
  double max_log_mismatch = 0.0;  ///< recomputed vs logged |e| per sample
  double max_lambda_mismatch = 0.0;
  bool pass = false;

  std::string csv() const;
  nlohmann::json summary() const;
};

inline constexpr const char* kBoundReportHeader =
    "k,t_k,t_end,lambda,lambda_logged,w_bar,e0,max_e,min_slack,tolerance,samples,flagged,"
    "flag_reason,jump_checked,jump_slack,status";

/// Replays the logged run interval by interval against the ISS envelope and
/// the jump inequality. Throws StructuralError on misaligned logs.
BoundReport certify_run(const std::vector<TrajectoryRow>& trajectory,
                        const std::vector<SupervisionRow>& supervision, const CertifyParams& params);

/// Reads config.json, trajectory.csv and supervision.csv from a run directory.
BoundReport certify_directory(const std::filesystem::path& dir,
                              std::optional<double> slack_constant = std::nullopt);

}  // namespace edgeform
