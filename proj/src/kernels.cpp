#include "edgeform/kernels.hpp"

#include <omp.h>

#include "edgeform/rng.hpp"

namespace edgeform::kernels {
namespace {

bool within(const Points& positions, int i, int j, double radius) {
  return (positions.col(i) - positions.col(j)).squaredNorm() <= radius * radius;
}

// Edges whose lower endpoint is drone i, in ascending head order.
void edges_from(const Points& positions, const NodeSet& nodes, double radius, int i,
                std::vector<Edge>& out) {
  const int n = nodes.total();
  for (int j = i + 1; j < n; ++j) {
    if (nodes.is_target(j) && nodes.visible_at_any_range(j)) {
      out.push_back({i, j});
    } else if (within(positions, i, j, radius)) {
      out.push_back({i, j});
    }
  }
}

double wrong_fraction_step(std::vector<unsigned char>& state, double a, double b,
                           std::vector<Rng>& rngs, int begin, int end) {
  double wrong = 0.0;
  for (int c = begin; c < end; ++c) {
    const double u = rngs[c].uniform();
    state[c] = state[c] ? (u < b ? 0 : 1) : (u < a ? 1 : 0);
    wrong += state[c];
  }
  return wrong;
}

}  // namespace

std::vector<Edge> radius_edges_serial(const Points& positions, const NodeSet& nodes,
                                      double radius) {
  std::vector<Edge> edges;
  for (int i = 0; i < nodes.num_drones; ++i) edges_from(positions, nodes, radius, i, edges);
  return edges;
}

std::vector<Edge> radius_edges(const Points& positions, const NodeSet& nodes, double radius) {
  const int drones = nodes.num_drones;
  if (nodes.total() < kParallelNodeThreshold) return radius_edges_serial(positions, nodes, radius);

  std::vector<std::vector<Edge>> rows(drones);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < drones; ++i) edges_from(positions, nodes, radius, i, rows[i]);

  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  std::vector<Edge> edges;
  edges.reserve(total);
  for (const auto& r : rows) edges.insert(edges.end(), r.begin(), r.end());
  return edges;
}

Points control_sum_serial(const Points& positions, const Points& node_reference,
                          const std::vector<std::vector<int>>& adjacency, int num_drones) {
  Points u = Points::Zero(positions.rows(), num_drones);
  for (int i = 0; i < num_drones; ++i) {
    for (int j : adjacency[i]) {
      u.col(i) += (positions.col(j) - positions.col(i)) -
                  (node_reference.col(j) - node_reference.col(i));
    }
  }
  return u;
}

Points control_sum(const Points& positions, const Points& node_reference,
                   const std::vector<std::vector<int>>& adjacency, int num_drones) {
  if (positions.cols() < kParallelNodeThreshold)
    return control_sum_serial(positions, node_reference, adjacency, num_drones);
  Points u = Points::Zero(positions.rows(), num_drones);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < num_drones; ++i) {
    for (int j : adjacency[i]) {
      u.col(i) += (positions.col(j) - positions.col(i)) -
                  (node_reference.col(j) - node_reference.col(i));
    }
  }
  return u;
}

std::vector<double> markov_wrong_frequency_serial(double a, double b, double p0, int steps,
                                                  int chains, std::uint64_t seed) {
  std::vector<Rng> rngs;
  rngs.reserve(chains);
  std::vector<unsigned char> state(chains);
  double wrong = 0.0;
  for (int c = 0; c < chains; ++c) {
    rngs.emplace_back(split_seed(seed, static_cast<std::uint64_t>(c)));
    state[c] = rngs.back().uniform() < p0 ? 1 : 0;
    wrong += state[c];
  }
  std::vector<double> freq{wrong / chains};
  for (int k = 1; k <= steps; ++k)
    freq.push_back(wrong_fraction_step(state, a, b, rngs, 0, chains) / chains);
  return freq;
}

std::vector<double> markov_wrong_frequency(double a, double b, double p0, int steps, int chains,
                                           std::uint64_t seed) {
  // Each chain owns its stream, so the per-chain path is independent of the
  // thread schedule; counts are integers, so the reduction is exact.
  std::vector<long> counts(steps + 1, 0);
#pragma omp parallel
  {
    std::vector<long> local(steps + 1, 0);
#pragma omp for schedule(static)
    for (int c = 0; c < chains; ++c) {
      Rng rng(split_seed(seed, static_cast<std::uint64_t>(c)));
      int s = rng.uniform() < p0 ? 1 : 0;
      local[0] += s;
      for (int k = 1; k <= steps; ++k) {
        const double u = rng.uniform();
        s = s ? (u < b ? 0 : 1) : (u < a ? 1 : 0);
        local[k] += s;
      }
    }
#pragma omp critical
    for (int k = 0; k <= steps; ++k) counts[k] += local[k];
  }
  std::vector<double> freq(steps + 1);
  for (int k = 0; k <= steps; ++k) freq[k] = static_cast<double>(counts[k]) / chains;
  return freq;
}

std::vector<double> map_indices_serial(int n, const std::function<double(int)>& fn) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = fn(i);
  return out;
}

std::vector<double> map_indices(int n, const std::function<double(int)>& fn) {
  std::vector<double> out(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) out[i] = fn(i);
  return out;
}

}  // namespace edgeform::kernels
