#include "edgeform/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "edgeform/kernels.hpp"

namespace edgeform {

bool NodeSet::visible_at_any_range(int node) const {
  if (!is_target(node) || always_visible.empty()) return false;
  return always_visible[node - num_drones];
}

void NodeSet::validate() const {
  if (num_drones < 1) throw StructuralError("node set needs at least one drone");
  if (num_targets < 0) throw StructuralError("negative target count");
  if (dim != 2 && dim != 3) throw StructuralError(fmt::format("unsupported dimension {}", dim));
  if (!always_visible.empty() && static_cast<int>(always_visible.size()) != num_targets)
    throw StructuralError("always_visible flags must match the target count");
}

InteractionGraph::InteractionGraph(NodeSet nodes, double radius, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), radius_(radius), edges_(std::move(edges)) {
  for (const Edge& e : edges_) {
    if (e.tail >= e.head || e.tail < 0 || e.head >= nodes_.total())
      throw StructuralError(fmt::format("malformed edge ({}, {})", e.tail, e.head));
    if (!nodes_.is_drone(e.tail))
      throw StructuralError(fmt::format("edge ({}, {}) has no drone endpoint", e.tail, e.head));
  }
}

Eigen::MatrixXd InteractionGraph::incidence() const {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(nodes_.total(), edge_count());
  for (int k = 0; k < edge_count(); ++k) {
    e(edges_[k].tail, k) = 1.0;
    e(edges_[k].head, k) = -1.0;
  }
  return e;
}

Eigen::MatrixXd InteractionGraph::drone_rows() const {
  return incidence().topRows(nodes_.num_drones);
}

Eigen::MatrixXd InteractionGraph::target_rows() const {
  return incidence().bottomRows(nodes_.num_targets);
}

std::vector<std::vector<int>> InteractionGraph::adjacency() const {
  std::vector<std::vector<int>> adj(nodes_.total());
  for (const Edge& e : edges_) {
    adj[e.tail].push_back(e.head);
    adj[e.head].push_back(e.tail);
  }
  return adj;
}

InteractionGraph build_graph(const Points& positions, const NodeSet& nodes, double radius) {
  nodes.validate();
  if (positions.rows() != nodes.dim || positions.cols() != nodes.total())
    throw StructuralError(fmt::format("positions are {}x{}, expected {}x{}", positions.rows(),
                                      positions.cols(), nodes.dim, nodes.total()));
  if (!(radius >= 0.0)) throw ParameterError("observation radius must be non-negative");
  return InteractionGraph(nodes, radius, kernels::radius_edges(positions, nodes, radius));
}

Eigen::MatrixXd incidence(const InteractionGraph& graph) { return graph.incidence(); }

std::vector<Component> connected_components(const InteractionGraph& graph) {
  const int n = graph.nodes().total();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Edge& e : graph.edges()) {
    const int a = find(e.tail), b = find(e.head);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  std::vector<int> slot(n, -1);
  std::vector<Component> out;
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(out.size());
      out.emplace_back();
    }
    Component& c = out[slot[root]];
    c.nodes.push_back(i);
    if (graph.nodes().is_drone(i)) c.has_drone = true;
  }
  for (Component& c : out) {
    const bool has_target = std::any_of(c.nodes.begin(), c.nodes.end(),
                                        [&](int i) { return graph.nodes().is_target(i); });
    c.anchored = c.has_drone && has_target;
  }
  return out;
}

double zero_eigenvalue_threshold(double lambda_max) {
  return 1e-9 * std::max(1.0, lambda_max);
}

double min_positive_eigenvalue(const Eigen::MatrixXd& symmetric_psd) {
  if (symmetric_psd.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric_psd, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const double tol = zero_eigenvalue_threshold(ev.maxCoeff());
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) > tol) return ev(i);
  return 0.0;
}

SpectralSummary actuated_edge_laplacian(const InteractionGraph& graph) {
  if (graph.edge_count() == 0)
    throw EmptyGraphError("actuated edge Laplacian is undefined on an empty edge set");
  SpectralSummary s;
  const Eigen::MatrixXd ea = graph.drone_rows();
  s.laplacian = ea.transpose() * ea;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.laplacian, Eigen::EigenvaluesOnly);
  s.eigenvalues = solver.eigenvalues();
  s.lambda_max = s.eigenvalues.maxCoeff();
  const double tol = zero_eigenvalue_threshold(s.lambda_max);
  s.kernel_dim = 0;
  s.lambda_min_plus = 0.0;
  for (int i = 0; i < s.eigenvalues.size(); ++i) {
    if (s.eigenvalues(i) <= tol) {
      ++s.kernel_dim;
    } else if (s.lambda_min_plus == 0.0) {
      s.lambda_min_plus = s.eigenvalues(i);
    }
  }
  s.rank = graph.edge_count() - s.kernel_dim;
  s.components = connected_components(graph);
  return s;
}

DroneSpectrum drone_spectrum(const InteractionGraph& graph) {
  DroneSpectrum out;
  if (graph.edge_count() == 0) return out;
  const Eigen::MatrixXd ea = graph.drone_rows();
  const Eigen::MatrixXd gram = ea * ea.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = solver.eigenvalues();
  out.lambda_max = ev.maxCoeff();
  const double tol = zero_eigenvalue_threshold(out.lambda_max);
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) > tol) {
      if (out.rank == 0) out.lambda_min_plus = ev(i);
      ++out.rank;
    }
  }
  return out;
}

double drone_incidence_norm(const InteractionGraph& graph) {
  return std::sqrt(std::max(0.0, drone_spectrum(graph).lambda_max));
}

RangeProjector::RangeProjector(const InteractionGraph& graph) : drone_rows_(graph.drone_rows()) {
  const Eigen::MatrixXd gram = drone_rows_ * drone_rows_.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const double tol = zero_eigenvalue_threshold(ev.size() ? ev.maxCoeff() : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) > tol) inv(i) = 1.0 / ev(i);
  pseudo_inv_ = solver.eigenvectors() * inv.asDiagonal() * solver.eigenvectors().transpose();
}

double RangeProjector::residual_norm(const Eigen::MatrixXd& edge_vectors) const {
  if (edge_vectors.cols() == 0) return 0.0;
  // Row-wise least squares: x = pinv(E_a E_a^T) E_a e, residual = e - E_a^T x.
  const Eigen::MatrixXd x = edge_vectors * drone_rows_.transpose() * pseudo_inv_;
  return (edge_vectors - x * drone_rows_).norm();
}

}  // namespace edgeform
