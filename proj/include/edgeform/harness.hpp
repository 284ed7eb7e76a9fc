#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "edgeform/bounds.hpp"
#include "edgeform/dynamics.hpp"
#include "edgeform/graph.hpp"

namespace edgeform::harness {

/// A fixed fleet driven by a custom reference schedule, without the
/// supervision stack. Used by the theory fixtures.
struct FixtureSpec {
  NodeSet nodes;
  Points drones;   ///< initial d x N_a
  Points targets;  ///< static d x N_b
  double radius = 10.0;
  double dt = 1e-3;
  double delta_t = 1.0;
  int checks = 1;  ///< number of intervals K
  DisturbanceModel disturbance;
};

struct CheckView {
  int k = 0;
  double t = 0.0;
  const SwarmState& state;        ///< at t_k^-
  const InteractionGraph& graph;
  const ReferenceSignal& reference;  ///< held reference before the check
};

struct TickView {
  int k = 0;
  double t = 0.0;
  double t_rel = 0.0;
  const SwarmState& state;
  const ReferenceSignal& reference;
  const InteractionGraph& graph;
  const Points& edge_error;
  const JumpRecord& last_jump;
};

/// Returns the new drone reference for check k (k = 0..checks-1).
using ReferenceFn = std::function<Points(const CheckView&)>;
using CheckFn = std::function<void(const CheckView&)>;
using TickFn = std::function<void(const TickView&)>;

struct FixtureTotals {
  double max_range_residual = 0.0;  ///< relative to max(1, |e|)
  double max_jump_residual = 0.0;   ///< identity residual over unchanged-graph checks
  int graph_changes = 0;            ///< ticks whose edge set differs from the previous tick
  long ticks = 0;
};

/// Runs checks * delta_t / dt ticks. `on_check` sees every t_k^- including the
/// final t_K^- (after which the run stops); `reference_fn` is called for k < K.
FixtureTotals simulate(const FixtureSpec& spec, const ReferenceFn& reference_fn,
                       const CheckFn& on_check, const TickFn& on_tick);

// ---------------------------------------------------------------------------
// ISS fixture: one drone anchored to one static target.

struct IssFixtureParams {
  double d_bar = 0.3;
  double dt = 1e-3;
  double delta_t = 2.0;
  double duration = 20.0;
  /// Worst-case variant: reference equals the start position, e0 = 0 and a
  /// constant disturbance drives |e| up along the envelope.
  bool worst_case = false;
};

struct IssFixtureResult {
  double max_excess = 0.0;  ///< max over ticks of |e| - envelope (negative when inside)
  double lambda = 0.0;
  double w_bar = 0.0;
  FixtureTotals totals;
};

IssFixtureResult run_iss_fixture(std::uint64_t seed, const IssFixtureParams& params);

struct SlackCalibration {
  double excess_dt = 0.0;
  double excess_half_dt = 0.0;
  double ratio = 0.0;     ///< excess_half_dt / excess_dt
  double constant = 0.0;  ///< C = excess_dt / dt
};

/// dt-halving sweep on the worst-case variant of the ISS fixture.
SlackCalibration calibrate_slack(const IssFixtureParams& params);

// ---------------------------------------------------------------------------
// Path fixture: drone - drone - target, lambda = (3 - sqrt 5) / 2.

FixtureSpec path_fixture(double dt, double delta_t, int checks, double d_bar, std::uint64_t seed);
/// Intent-perfect drone positions of the path fixture.
Points path_ideal_drones();

struct CorollaryParams {
  double eps_z = 0.1;
  double delta_z = 0.5;
  double d_bar = 0.05;
  double delta_t = 2.0;
  double dt = 1e-3;
  int intervals = 200;
  double slack_constant = 0.0;  ///< C; tolerance is C * dt
};

struct CorollaryResult {
  EtaMax eta;
  double lambda = 0.0;
  double w_bar = 0.0;
  int intervals = 0;
  int clamped = 0;                 ///< checks where the post-check error was clamped to eta_max
  double max_gap_end = 0.0;        ///< max |z - z*| at t_{k+1}^-
  double max_reference_gap = 0.0;  ///< max |z^r - z*|
  int violations = 0;              ///< intervals with |z - z*| > delta_z + C dt
  FixtureTotals totals;
};

CorollaryResult run_corollary_fixture(std::uint64_t seed, const CorollaryParams& params);

struct CertificationParams {
  double jump_bound = 0.2;
  double eps_correct = 0.05;
  double eps_wrong = 0.5;
  double markov_a = 0.2;
  double markov_b = 0.6;
  double p0 = 0.5;
  double d_bar = 0.05;
  double delta_t = 1.0;
  double dt = 1e-3;
  int checks = 30;
};

struct CertificationRun {
  double measured_average = 0.0;  ///< (1/T_f) integral |e_gt| dt
  double max_jump = 0.0;          ///< realized max |dz^r| over checks k >= 1
  double max_gap_correct = 0.0;
  double max_gap_wrong = 0.0;
  double eta0 = 0.0;
  int wrong_checks = 0;
  FixtureTotals totals;
};

CertificationRun run_certification_fixture(std::uint64_t seed, const CertificationParams& params);

/// Horizon parameters of the certification fixture for a given eta0.
HorizonParams certification_horizon(const CertificationParams& params, double eta0);
/// w_bar of the path fixture: |E_a| * d_bar.
double path_w_bar(double d_bar);
double path_lambda();

}  // namespace edgeform::harness
