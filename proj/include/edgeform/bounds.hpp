#pragma once

#include <vector>

#include "edgeform/common.hpp"

namespace edgeform {

/// Per-interval quantities of the ISS analysis.
struct IntervalParams {
  double lambda = 1.0;
  double w_bar = 0.0;
  double delta_t = 1.0;
  double e0_norm = 0.0;
  double eps_z = 0.0;
  double delta_z = 1.0;
  double nu_bar = 0.0;
  double v_r_bar = 0.0;
  double d_a_bar = 0.0;
  double v_b_bar = 0.0;
};

/// Parameters of the horizon-wide analysis under stochastic verification.
struct HorizonParams {
  double alpha = 0.5;         ///< e^{-lambda_floor * delta_t}
  double lambda_floor = 1.0;
  double jump_bound = 0.0;    ///< J_z
  double eps_correct = 0.0;
  double eps_wrong = 0.0;
  double markov_a = 0.5;      ///< P(correct -> wrong)
  double markov_b = 0.5;      ///< P(wrong -> correct)
  double p0 = 0.0;
  int K = 1;
  double eta0 = 0.0;
};

/// e^{-lambda t} e0 + (w/lambda)(1 - e^{-lambda t}).
double iss_envelope(const IntervalParams& p, double t_rel);

/// Same form for the drone tracking error |p_a^r - p_a| with nu_bar as input
/// level and e0_norm read as |p_a^r - p_a|(t_k+). Throws ParameterError when
/// the component is not anchored.
double node_envelope(const IntervalParams& p, double t_rel, bool anchored = true);

struct EtaMax {
  double threshold = 0.0;  ///< may be negative
  bool feasible = false;   ///< eps_z + (w/lambda)(1 - e^{-lambda Delta}) <= delta_z
};
EtaMax eta_max(const IntervalParams& p);

struct EtaSequence {
  std::vector<double> iterates;     ///< eta_0 .. eta_K by direct iteration
  std::vector<double> closed_form;  ///< alpha^k eta_0 + (1 - alpha^k) eta_inf
  double eta_inf = 0.0;
};
/// Iterates eta_{k+1} = alpha eta_k + (w/lambda)(1 - alpha) + J for k < K.
EtaSequence eta_recursion(const HorizonParams& h, double w_bar);

struct MarkovWrong {
  double pi_wrong = 0.0;
  double p_k = 0.0;            ///< closed form
  double p_k_recursion = 0.0;  ///< p_{j+1} = a + (1 - a - b) p_j
  double running_average = 0.0;  ///< (1/K) sum_{j<K} p_j, closed form with K = h.K
};
MarkovWrong markov_wrong_prob(const HorizonParams& h, int k);
/// Direct summation of the recursion, used to check the closed form.
double markov_running_average_direct(const HorizonParams& h);

struct HorizonBound {
  double finite = 0.0;
  double asymptotic = 0.0;
  double tracking_term = 0.0;  ///< w/lambda + J/(lambda Delta)
  double gap_term = 0.0;       ///< eps_C + (eps_W - eps_C) avg p
  double transient_term = 0.0; ///< max(0, eta0 - eta_inf)/(K lambda Delta)
  double eta_inf = 0.0;
};
HorizonBound horizon_bound(const HorizonParams& h, double w_bar, double delta_t);

}  // namespace edgeform
