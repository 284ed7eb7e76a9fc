#pragma once

// Data-parallel kernels. Every parallel kernel has a `_serial` twin that is the
// reference implementation used by the tests; both produce bit-identical output.

#include <cstdint>
#include <functional>
#include <vector>

#include "edgeform/common.hpp"
#include "edgeform/graph.hpp"

namespace edgeform::kernels {

/// Below this many nodes the parallel kernels run serially.
inline constexpr int kParallelNodeThreshold = 256;

std::vector<Edge> radius_edges_serial(const Points& positions, const NodeSet& nodes,
                                      double radius);
std::vector<Edge> radius_edges(const Points& positions, const NodeSet& nodes, double radius);

/// Per-drone neighbor sum  u_i = sum_j ((p_j - p_i) - (p^r_j - p^r_i)).
/// `positions` and `node_reference` hold all N nodes; returns d x N_a.
Points control_sum_serial(const Points& positions, const Points& node_reference,
                          const std::vector<std::vector<int>>& adjacency, int num_drones);
Points control_sum(const Points& positions, const Points& node_reference,
                   const std::vector<std::vector<int>>& adjacency, int num_drones);

/// Two-state chain (0 = correct, 1 = wrong) with P(0->1) = a, P(1->0) = b.
/// Returns the fraction of `chains` sampled paths in the wrong state at each
/// step k = 0..steps. Chain c draws from stream split_seed(seed, c).
std::vector<double> markov_wrong_frequency_serial(double a, double b, double p0, int steps,
                                                  int chains, std::uint64_t seed);
std::vector<double> markov_wrong_frequency(double a, double b, double p0, int steps, int chains,
                                           std::uint64_t seed);

/// Evaluates fn(i) for i in [0, n) and returns results in index order.
std::vector<double> map_indices_serial(int n, const std::function<double(int)>& fn);
std::vector<double> map_indices(int n, const std::function<double(int)>& fn);

}  // namespace edgeform::kernels
