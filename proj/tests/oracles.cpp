#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oracle {

std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a, double tol, int max_sweeps) {
  const int n = static_cast<int>(a.rows());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= tol * std::max(1.0, a.norm())) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> nonzero(const std::vector<double>& values, double zero) {
  std::vector<double> out;
  for (double v : values)
    if (std::abs(v) > zero) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

UnionFind::UnionFind(int n) : parent_(static_cast<std::size_t>(n)), count_(n) {
  std::iota(parent_.begin(), parent_.end(), 0);
}

int UnionFind::find(int x) {
  while (parent_[static_cast<std::size_t>(x)] != x) {
    parent_[static_cast<std::size_t>(x)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(x)])];
    x = parent_[static_cast<std::size_t>(x)];
  }
  return x;
}

void UnionFind::unite(int a, int b) {
  a = find(a);
  b = find(b);
  if (a == b) return;
  parent_[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  --count_;
}

std::vector<std::pair<int, int>> brute_force_edges(const Eigen::MatrixXd& positions, int num_drones,
                                                   double r) {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(positions.cols());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (i >= num_drones && j >= num_drones) continue;
      double sq = 0.0;
      for (int d = 0; d < positions.rows(); ++d) {
        const double diff = positions(d, i) - positions(d, j);
        sq += diff * diff;
      }
      if (std::sqrt(sq) <= r) out.emplace_back(i, j);
    }
  return out;
}

long double envelope_ld(long double lambda, long double w, long double e0, long double t) {
  const long double decay = std::exp(-lambda * t);
  return decay * e0 + (w / lambda) * (1.0L - decay);
}

double markov_frequency(double a, double b, double p0, int steps, int chains, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution start(p0), c_to_w(a), w_to_c(b);
  long wrong = 0;
  for (int c = 0; c < chains; ++c) {
    bool w = start(gen);
    for (int k = 0; k < steps; ++k) w = w ? !w_to_c(gen) : c_to_w(gen);
    wrong += w ? 1 : 0;
  }
  return static_cast<double>(wrong) / chains;
}

Eigen::MatrixXd random_points(int dim, int n, double box, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, box);
  Eigen::MatrixXd p(dim, n);
  for (int j = 0; j < n; ++j)
    for (int d = 0; d < dim; ++d) p(d, j) = u(gen);
  return p;
}

}  // namespace oracle
