// Serial vs parallel kernels. Arg(0) is the node count or chain count.

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "edgeform/kernels.hpp"

using namespace edgeform;
namespace k = edgeform::kernels;

namespace {

NodeSet fleet(int n) {
  NodeSet s;
  s.num_drones = n - n / 8;
  s.num_targets = n / 8;
  return s;
}

Points scatter(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 4.0 * std::cbrt(static_cast<double>(n)));
  Points p(3, n);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) p(a, i) = u(gen);
  return p;
}

template <auto Fn>
void BM_radius_edges(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Points p = scatter(n, 1);
  const NodeSet ns = fleet(n);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(p, ns, 5.0));
  state.SetItemsProcessed(state.iterations() * n);
}

template <auto Fn>
void BM_control_sum(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Points p = scatter(n, 2);
  const Points ref = scatter(n, 3);
  const NodeSet ns = fleet(n);
  const auto adjacency = InteractionGraph(ns, 5.0, k::radius_edges_serial(p, ns, 5.0)).adjacency();
  for (auto _ : state) benchmark::DoNotOptimize(Fn(p, ref, adjacency, ns.num_drones));
  state.SetItemsProcessed(state.iterations() * n);
}

template <auto Fn>
void BM_markov(benchmark::State& state) {
  const int chains = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(0.2, 0.6, 0.5, 30, chains, 7));
  state.SetItemsProcessed(state.iterations() * chains);
}

template <auto Fn>
void BM_map_indices(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto work = [](int i) {
    double x = i;
    for (int j = 0; j < 2000; ++j) x = std::sin(x) + 1.0;
    return x;
  };
  for (auto _ : state) benchmark::DoNotOptimize(Fn(n, work));
  state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(BM_radius_edges<k::radius_edges_serial>)->Name("radius_edges/serial")->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK(BM_radius_edges<k::radius_edges>)->Name("radius_edges/parallel")->RangeMultiplier(4)->Range(64, 4096)->UseRealTime();
BENCHMARK(BM_control_sum<k::control_sum_serial>)->Name("control_sum/serial")->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK(BM_control_sum<k::control_sum>)->Name("control_sum/parallel")->RangeMultiplier(4)->Range(64, 4096)->UseRealTime();
BENCHMARK(BM_markov<k::markov_wrong_frequency_serial>)->Name("markov/serial")->Arg(10000)->Arg(100000);
BENCHMARK(BM_markov<k::markov_wrong_frequency>)->Name("markov/parallel")->Arg(10000)->Arg(100000)->UseRealTime();
BENCHMARK(BM_map_indices<k::map_indices_serial>)->Name("map_indices/serial")->Arg(64)->Arg(512);
BENCHMARK(BM_map_indices<k::map_indices>)->Name("map_indices/parallel")->Arg(64)->Arg(512)->UseRealTime();

BENCHMARK_MAIN();
