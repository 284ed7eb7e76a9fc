#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "edgeform/common.hpp"
#include "edgeform/graph.hpp"
#include "edgeform/rng.hpp"

namespace edgeform {

struct SwarmState {
  double time = 0.0;
  Points drones;   ///< d x N_a
  Points targets;  ///< d x N_b

  int dim() const { return static_cast<int>(drones.rows()); }
  int num_drones() const { return static_cast<int>(drones.cols()); }
  int num_targets() const { return static_cast<int>(targets.cols()); }
  /// [p_a; p_b] as a d x N point list.
  Points stacked() const;
};

/// Enforced drone reference, held between supervision instants.
struct ReferenceSignal {
  Points drones;  ///< d x N_a
  double valid_from = 0.0;
  double jump_magnitude = 0.0;

  /// [p_a^r; p_b]: targets are their own reference.
  Points node_reference(const SwarmState& state) const;
};

enum class DisturbanceKind { none, constant, sinusoidal, bounded_noise };

struct DisturbanceModel {
  DisturbanceKind kind = DisturbanceKind::none;
  double bound = 0.0;  ///< bound on the stacked norm |d_a(t)|
  std::uint64_t seed = 0;
  Eigen::VectorXd direction;  ///< per-drone vector for `constant`
  double frequency = 0.5;     ///< rad/s for `sinusoidal`
};

/// Stateful sampler; one draw per controller tick.
class DisturbanceSampler {
 public:
  DisturbanceSampler(DisturbanceModel model, int dim, int num_drones);
  Points sample(double time);
  const DisturbanceModel& model() const { return model_; }

 private:
  DisturbanceModel model_;
  int dim_;
  int num_drones_;
  Rng rng_;
};

struct TargetLeg {
  Eigen::VectorXd to;
  double speed = 1.0;
  double wait = 0.0;  ///< hold time before the leg starts
};

/// Time-stamped polyline. After the last leg the target stops.
class TargetScript {
 public:
  TargetScript() = default;
  TargetScript(Eigen::VectorXd start, std::vector<TargetLeg> legs);

  Eigen::VectorXd start() const { return start_; }
  Eigen::VectorXd velocity_at(double time) const;
  double max_speed() const;
  const std::vector<TargetLeg>& legs() const { return legs_; }

 private:
  struct Segment {
    double begin = 0.0;
    double end = 0.0;
    Eigen::VectorXd velocity;
  };
  Eigen::VectorXd start_;
  std::vector<TargetLeg> legs_;
  std::vector<Segment> segments_;
};

/// Distributed edge-error feedback in per-node sum form.
Points control_input(const SwarmState& state, const ReferenceSignal& reference,
                     const InteractionGraph& graph);
/// Same law in stacked form, (E_a (x) I_d) e.
Points control_input_stacked(const SwarmState& state, const ReferenceSignal& reference,
                             const InteractionGraph& graph);

/// e = z^r - z as a d x m matrix (one column per edge), via the full incidence.
Points edge_error(const SwarmState& state, const ReferenceSignal& reference,
                  const InteractionGraph& graph);
/// e = (E_a^T (x) I_d)(p_a^r - p_a), via drone rows only.
Points edge_error_drone_rows(const SwarmState& state, const ReferenceSignal& reference,
                             const InteractionGraph& graph);

/// w = zdot^r - (E^T (x) I_d) d, cross-checked against (E_a^T (x) I_d)(pdot_a^r - d_a).
/// Throws ConsistencyFault when the two routes differ by more than 1e-10.
Points exogenous_input(const InteractionGraph& graph, const Points& reference_velocity,
                       const Points& disturbance, const Points& target_velocity);

/// Explicit Euler update with an externally computed control.
SwarmState integrate(const SwarmState& state, const Points& control, const Points& disturbance,
                     const Points& target_velocity, double dt);

/// One controller tick: computes u from the graph, then integrates.
SwarmState step(const SwarmState& state, const ReferenceSignal& reference,
                const InteractionGraph& graph, const Points& disturbance,
                const Points& target_velocity, double dt);

struct JumpRecord {
  bool graph_unchanged = true;
  bool reinitialized = false;
  Points delta_z;  ///< z^r(t_k+) - z^r(t_k-), empty when reinitialized
  Points e_minus;
  Points e_plus;
  double jump_norm = 0.0;
  double e_minus_norm = 0.0;
  double e_plus_norm = 0.0;
  /// max |e(t_k+) - e(t_k-) - delta_z| over components; 0 when reinitialized.
  double identity_residual = 0.0;
};

/// Swaps the enforced reference at a supervision instant and records the
/// induced jump of the edge error.
std::pair<ReferenceSignal, JumpRecord> apply_jump(const ReferenceSignal& reference_old,
                                                  const Points& reference_new,
                                                  const InteractionGraph& graph_before,
                                                  const InteractionGraph& graph_after,
                                                  const SwarmState& state);

}  // namespace edgeform
