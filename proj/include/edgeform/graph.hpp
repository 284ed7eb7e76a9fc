#pragma once

#include <vector>

#include "edgeform/common.hpp"

namespace edgeform {

/// Node bookkeeping. Indices [0, num_drones) are drones, the rest targets.
struct NodeSet {
  int num_drones = 1;
  int num_targets = 0;
  int dim = 3;
  /// Optional per-target flag: the target is observed by every drone regardless
  /// of range (a long-range link such as a base vehicle). Empty means none.
  std::vector<bool> always_visible;

  int total() const { return num_drones + num_targets; }
  bool is_drone(int i) const { return i < num_drones; }
  bool is_target(int i) const { return i >= num_drones && i < total(); }
  bool visible_at_any_range(int node) const;
  void validate() const;
};

/// Oriented edge: +1 at `tail`, -1 at `head`, with tail < head.
struct Edge {
  int tail = 0;
  int head = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

class InteractionGraph {
 public:
  InteractionGraph() = default;
  InteractionGraph(NodeSet nodes, double radius, std::vector<Edge> edges);

  const NodeSet& nodes() const { return nodes_; }
  double radius() const { return radius_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  /// N x m oriented incidence matrix E.
  Eigen::MatrixXd incidence() const;
  /// First num_drones rows of E.
  Eigen::MatrixXd drone_rows() const;
  /// Last num_targets rows of E.
  Eigen::MatrixXd target_rows() const;

  /// Neighbor lists indexed by node.
  std::vector<std::vector<int>> adjacency() const;

  bool same_edges(const InteractionGraph& other) const { return edges_ == other.edges_; }

 private:
  NodeSet nodes_;
  double radius_ = 0.0;
  std::vector<Edge> edges_;
};

/// Radius-induced graph: (i, j) is an edge iff i is a drone, j != i and
/// |p_i - p_j| <= r. Target-target pairs never form edges.
InteractionGraph build_graph(const Points& positions, const NodeSet& nodes, double radius);

Eigen::MatrixXd incidence(const InteractionGraph& graph);

struct Component {
  std::vector<int> nodes;
  bool anchored = false;  ///< contains at least one target and one drone
  bool has_drone = false;
};

std::vector<Component> connected_components(const InteractionGraph& graph);

struct SpectralSummary {
  Eigen::MatrixXd laplacian;     ///< L_e^a = E_a^T E_a (m x m)
  Eigen::VectorXd eigenvalues;   ///< ascending
  double lambda_min_plus = 0.0;  ///< smallest strictly positive eigenvalue
  double lambda_max = 0.0;
  int kernel_dim = 0;
  int rank = 0;
  std::vector<Component> components;
};

/// Zero threshold used for every spectral decision in the project.
double zero_eigenvalue_threshold(double lambda_max);

/// Eigen-decomposes the actuated edge Laplacian. Throws EmptyGraphError when
/// the graph has no edges.
SpectralSummary actuated_edge_laplacian(const InteractionGraph& graph);

/// Smallest strictly positive eigenvalue of a symmetric PSD matrix, or 0 when
/// every eigenvalue is below the zero threshold.
double min_positive_eigenvalue(const Eigen::MatrixXd& symmetric_psd);

/// Drone-side spectral data computed from E_a E_a^T (N_a x N_a), which shares
/// its nonzero spectrum with L_e^a but stays small for dense graphs.
struct DroneSpectrum {
  double lambda_min_plus = 0.0;
  double lambda_max = 0.0;  ///< also the squared spectral norm of E_a
  int rank = 0;
};
DroneSpectrum drone_spectrum(const InteractionGraph& graph);

/// Largest singular value of E_a^T (equivalently of E_a).
double drone_incidence_norm(const InteractionGraph& graph);

/// Projects edge vectors (d x m, one column per edge) onto range(E_a^T (x) I_d)
/// and returns the norm of the orthogonal residual.
class RangeProjector {
 public:
  explicit RangeProjector(const InteractionGraph& graph);
  double residual_norm(const Eigen::MatrixXd& edge_vectors) const;

 private:
  Eigen::MatrixXd drone_rows_;   // N_a x m
  Eigen::MatrixXd pseudo_inv_;   // pinv(E_a E_a^T), N_a x N_a
};

}  // namespace edgeform
