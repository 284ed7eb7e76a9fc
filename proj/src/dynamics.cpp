#include "edgeform/dynamics.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "edgeform/kernels.hpp"

namespace edgeform {

Points SwarmState::stacked() const {
  Points p(drones.rows(), drones.cols() + targets.cols());
  p << drones, targets;
  return p;
}

Points ReferenceSignal::node_reference(const SwarmState& state) const {
  Points p(drones.rows(), drones.cols() + state.targets.cols());
  p << drones, state.targets;
  return p;
}

DisturbanceSampler::DisturbanceSampler(DisturbanceModel model, int dim, int num_drones)
    : model_(std::move(model)), dim_(dim), num_drones_(num_drones), rng_(model_.seed) {
  if (model_.bound < 0.0) throw ParameterError("disturbance bound must be non-negative");
}

namespace {

void clip_stacked(Points& d, double bound) {
  const double n = d.norm();
  if (n > bound && n > 0.0) d *= bound / n;
}

}  // namespace

Points DisturbanceSampler::sample(double time) {
  Points d = Points::Zero(dim_, num_drones_);
  switch (model_.kind) {
    case DisturbanceKind::none:
      break;
    case DisturbanceKind::constant:
      if (model_.direction.size() != dim_)
        throw StructuralError("constant disturbance direction has the wrong dimension");
      for (int i = 0; i < num_drones_; ++i) d.col(i) = model_.direction;
      break;
    case DisturbanceKind::sinusoidal: {
      const double amp = model_.bound / std::sqrt(static_cast<double>(num_drones_));
      for (int i = 0; i < num_drones_; ++i) {
        const double phase = model_.frequency * time + 2.0 * std::numbers::pi * i / num_drones_;
        d(0, i) = amp * std::sin(phase);
        d(1, i) = amp * std::cos(phase);
      }
      break;
    }
    case DisturbanceKind::bounded_noise: {
      for (int i = 0; i < num_drones_; ++i)
        for (int a = 0; a < dim_; ++a) d(a, i) = rng_.normal();
      const double n = d.norm();
      if (n > 0.0) d *= model_.bound / n;
      break;
    }
  }
  clip_stacked(d, model_.bound);
  return d;
}

TargetScript::TargetScript(Eigen::VectorXd start, std::vector<TargetLeg> legs)
    : start_(std::move(start)), legs_(std::move(legs)) {
  double t = 0.0;
  Eigen::VectorXd at = start_;
  for (const TargetLeg& leg : legs_) {
    if (leg.to.size() != start_.size()) throw StructuralError("target leg dimension mismatch");
    if (!(leg.speed > 0.0)) throw ParameterError("target leg speed must be positive");
    if (leg.wait < 0.0) throw ParameterError("target leg wait must be non-negative");
    if (leg.wait > 0.0) {
      segments_.push_back({t, t + leg.wait, Eigen::VectorXd::Zero(start_.size())});
      t += leg.wait;
    }
    const Eigen::VectorXd delta = leg.to - at;
    const double len = delta.norm();
    if (len > 0.0) {
      const double dur = len / leg.speed;
      segments_.push_back({t, t + dur, delta / dur});
      t += dur;
    }
    at = leg.to;
  }
}

Eigen::VectorXd TargetScript::velocity_at(double time) const {
  for (const Segment& s : segments_)
    if (time >= s.begin && time < s.end) return s.velocity;
  return Eigen::VectorXd::Zero(start_.size());
}

double TargetScript::max_speed() const {
  double v = 0.0;
  for (const Segment& s : segments_) v = std::max(v, s.velocity.norm());
  return v;
}

namespace {

void check_shapes(const SwarmState& state, const ReferenceSignal& reference,
                  const InteractionGraph& graph) {
  const NodeSet& n = graph.nodes();
  if (state.drones.cols() != n.num_drones || state.targets.cols() != n.num_targets ||
      state.drones.rows() != n.dim || reference.drones.cols() != n.num_drones ||
      reference.drones.rows() != n.dim)
    throw StructuralError("state, reference and graph disagree on node counts");
}

}  // namespace

Points control_input(const SwarmState& state, const ReferenceSignal& reference,
                     const InteractionGraph& graph) {
  check_shapes(state, reference, graph);
  return kernels::control_sum(state.stacked(), reference.node_reference(state), graph.adjacency(),
                              graph.nodes().num_drones);
}

Points control_input_stacked(const SwarmState& state, const ReferenceSignal& reference,
                             const InteractionGraph& graph) {
  const Points e = edge_error(state, reference, graph);
  return e * graph.drone_rows().transpose();
}

Points edge_error(const SwarmState& state, const ReferenceSignal& reference,
                  const InteractionGraph& graph) {
  check_shapes(state, reference, graph);
  const Eigen::MatrixXd inc = graph.incidence();
  return reference.node_reference(state) * inc - state.stacked() * inc;
}

Points edge_error_drone_rows(const SwarmState& state, const ReferenceSignal& reference,
                             const InteractionGraph& graph) {
  check_shapes(state, reference, graph);
  return (reference.drones - state.drones) * graph.drone_rows();
}

Points exogenous_input(const InteractionGraph& graph, const Points& reference_velocity,
                       const Points& disturbance, const Points& target_velocity) {
  const NodeSet& n = graph.nodes();
  if (reference_velocity.cols() != n.num_drones || disturbance.cols() != n.num_drones ||
      target_velocity.cols() != n.num_targets)
    throw StructuralError("exogenous input blocks have the wrong node counts");
  const Eigen::MatrixXd inc = graph.incidence();
  Points ref_rate(n.dim, n.total()), d(n.dim, n.total());
  ref_rate << reference_velocity, target_velocity;
  d << disturbance, target_velocity;
  const Points w = ref_rate * inc - d * inc;
  const Points simplified = (reference_velocity - disturbance) * graph.drone_rows();
  const double gap = (w - simplified).cwiseAbs().maxCoeff();
  if (w.size() > 0 && gap > 1e-10 * std::max(1.0, w.norm()))
    throw ConsistencyFault(fmt::format("exogenous input routes differ by {:g}", gap));
  return w;
}

SwarmState integrate(const SwarmState& state, const Points& control, const Points& disturbance,
                     const Points& target_velocity, double dt) {
  if (!(dt > 0.0)) throw ParameterError("time step must be positive");
  SwarmState next;
  next.time = state.time + dt;
  next.drones = state.drones + (control + disturbance) * dt;
  next.targets = state.targets + target_velocity * dt;
  for (int i = 0; i < next.drones.cols(); ++i)
    if (!next.drones.col(i).allFinite())
      throw NumericFault(fmt::format("drone {} left the finite range", i), i);
  for (int j = 0; j < next.targets.cols(); ++j)
    if (!next.targets.col(j).allFinite())
      throw NumericFault(fmt::format("target {} left the finite range", j),
                         static_cast<int>(next.drones.cols()) + j);
  return next;
}

SwarmState step(const SwarmState& state, const ReferenceSignal& reference,
                const InteractionGraph& graph, const Points& disturbance,
                const Points& target_velocity, double dt) {
  return integrate(state, control_input(state, reference, graph), disturbance, target_velocity,
                   dt);
}

std::pair<ReferenceSignal, JumpRecord> apply_jump(const ReferenceSignal& reference_old,
                                                  const Points& reference_new,
                                                  const InteractionGraph& graph_before,
                                                  const InteractionGraph& graph_after,
                                                  const SwarmState& state) {
  JumpRecord rec;
  ReferenceSignal next{reference_new, state.time, 0.0};
  rec.graph_unchanged = graph_before.same_edges(graph_after);
  rec.reinitialized = !rec.graph_unchanged;

  const Points z = state.stacked() * graph_after.incidence();
  const Points zr_plus = next.node_reference(state) * graph_after.incidence();
  rec.e_plus = zr_plus - z;
  rec.e_plus_norm = rec.e_plus.norm();

  if (rec.graph_unchanged) {
    const Points zr_minus = reference_old.node_reference(state) * graph_after.incidence();
    rec.e_minus = zr_minus - z;
    rec.delta_z = zr_plus - zr_minus;
    rec.jump_norm = rec.delta_z.norm();
    rec.identity_residual =
        rec.delta_z.size() ? (rec.e_plus - rec.e_minus - rec.delta_z).cwiseAbs().maxCoeff() : 0.0;
  } else {
    const Points zb = state.stacked() * graph_before.incidence();
    rec.e_minus = reference_old.node_reference(state) * graph_before.incidence() - zb;
    // Edge coordinates changed; the jump is measured on the drone reference itself.
    rec.jump_norm = (reference_new - reference_old.drones).norm();
  }
  rec.e_minus_norm = rec.e_minus.norm();
  next.jump_magnitude = rec.jump_norm;
  return {std::move(next), std::move(rec)};
}

}  // namespace edgeform
