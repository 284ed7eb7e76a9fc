#include "edgeform/bounds.hpp"

#include <algorithm>
#include <cmath>

namespace edgeform {

namespace {

void require_lambda(double lambda) {
  if (!(lambda > 0.0)) throw ParameterError("contraction rate lambda must be positive");
}

void require_chain(const HorizonParams& h) {
  if (h.markov_a + h.markov_b == 0.0) throw ParameterError("degenerate chain: a + b = 0");
  if (h.markov_a < 0.0 || h.markov_a > 1.0 || h.markov_b < 0.0 || h.markov_b > 1.0)
    throw ParameterError("transition probabilities must lie in [0, 1]");
}

}  // namespace

double iss_envelope(const IntervalParams& p, double t_rel) {
  require_lambda(p.lambda);
  const double decay = std::exp(-p.lambda * t_rel);
  return decay * p.e0_norm + (p.w_bar / p.lambda) * (1.0 - decay);
}

double node_envelope(const IntervalParams& p, double t_rel, bool anchored) {
  if (!anchored) throw ParameterError("node bound is inapplicable to an unanchored component");
  require_lambda(p.lambda);
  const double decay = std::exp(-p.lambda * t_rel);
  return decay * p.e0_norm + (p.nu_bar / p.lambda) * (1.0 - decay);
}

EtaMax eta_max(const IntervalParams& p) {
  require_lambda(p.lambda);
  const double grow = std::exp(p.lambda * p.delta_t);
  EtaMax out;
  out.threshold = grow * (p.delta_z - p.eps_z) - (p.w_bar / p.lambda) * (grow - 1.0);
  out.feasible =
      p.eps_z + (p.w_bar / p.lambda) * (1.0 - std::exp(-p.lambda * p.delta_t)) <= p.delta_z;
  return out;
}

EtaSequence eta_recursion(const HorizonParams& h, double w_bar) {
  if (!(h.alpha > 0.0) || h.alpha >= 1.0) throw ParameterError("alpha must lie in (0, 1)");
  require_lambda(h.lambda_floor);
  if (h.K < 0) throw ParameterError("K must be non-negative");
  EtaSequence s;
  const double floor_term = w_bar / h.lambda_floor;
  s.eta_inf = floor_term + h.jump_bound / (1.0 - h.alpha);
  double eta = h.eta0;
  double alpha_k = 1.0;
  for (int k = 0; k <= h.K; ++k) {
    s.iterates.push_back(eta);
    s.closed_form.push_back(alpha_k * h.eta0 + (1.0 - alpha_k) * s.eta_inf);
    eta = h.alpha * eta + floor_term * (1.0 - h.alpha) + h.jump_bound;
    alpha_k *= h.alpha;
  }
  return s;
}

MarkovWrong markov_wrong_prob(const HorizonParams& h, int k) {
  require_chain(h);
  if (k < 0) throw ParameterError("k must be non-negative");
  const double a = h.markov_a;
  const double b = h.markov_b;
  const double rho = 1.0 - a - b;
  MarkovWrong m;
  m.pi_wrong = a / (a + b);
  m.p_k = m.pi_wrong + (h.p0 - m.pi_wrong) * std::pow(rho, k);
  double p = h.p0;
  for (int j = 0; j < k; ++j) p = a + rho * p;
  m.p_k_recursion = p;
  if (h.K >= 1)
    m.running_average = m.pi_wrong + (h.p0 - m.pi_wrong) * (1.0 - std::pow(rho, h.K)) /
                                         (static_cast<double>(h.K) * (a + b));
  return m;
}

double markov_running_average_direct(const HorizonParams& h) {
  require_chain(h);
  if (h.K < 1) throw ParameterError("K must be at least 1");
  double p = h.p0;
  double sum = 0.0;
  for (int j = 0; j < h.K; ++j) {
    sum += p;
    p = h.markov_a + (1.0 - h.markov_a - h.markov_b) * p;
  }
  return sum / h.K;
}

HorizonBound horizon_bound(const HorizonParams& h, double w_bar, double delta_t) {
  require_lambda(h.lambda_floor);
  if (h.K < 1) throw ParameterError("K must be at least 1");
  if (!(delta_t > 0.0)) throw ParameterError("check interval must be positive");
  if (h.eps_correct > h.eps_wrong) throw ParameterError("eps_correct must not exceed eps_wrong");
  const MarkovWrong m = markov_wrong_prob(h, 0);
  const double alpha = std::exp(-h.lambda_floor * delta_t);
  HorizonBound b;
  b.eta_inf = w_bar / h.lambda_floor + h.jump_bound / (1.0 - alpha);
  b.tracking_term = w_bar / h.lambda_floor + h.jump_bound / (h.lambda_floor * delta_t);
  b.gap_term = h.eps_correct + (h.eps_wrong - h.eps_correct) * m.running_average;
  b.transient_term = std::max(0.0, h.eta0 - b.eta_inf) / (h.K * h.lambda_floor * delta_t);
  b.finite = b.tracking_term + b.gap_term + b.transient_term;
  b.asymptotic = b.tracking_term + h.eps_correct + m.pi_wrong * (h.eps_wrong - h.eps_correct);
  return b;
}

}  // namespace edgeform
