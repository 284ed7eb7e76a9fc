#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>

#include "edgeform/bounds.hpp"
#include "oracles.hpp"

using namespace edgeform;

TEST(Envelope, StartsAtInitialError) {
  IntervalParams p;
  p.lambda = 0.7;
  p.w_bar = 0.4;
  p.e0_norm = 3.25;
  EXPECT_EQ(iss_envelope(p, 0.0), 3.25);
}

TEST(Envelope, ApproachesSteadyState) {
  IntervalParams p;
  p.lambda = 2.0;
  p.w_bar = 0.6;
  p.e0_norm = 5.0;
  EXPECT_NEAR(iss_envelope(p, 100.0), 0.3, 1e-15);
}

TEST(Envelope, PathGraphExample) {
  IntervalParams p;
  p.lambda = 0.381966;
  p.w_bar = 0.2;
  p.e0_norm = 1.0;
  const double v = iss_envelope(p, 2.0);
  EXPECT_NEAR(v, static_cast<double>(oracle::envelope_ld(0.381966L, 0.2L, 1.0L, 2.0L)), 1e-14);
  EXPECT_NEAR(v, 0.7455, 5e-5);
}

TEST(Envelope, RejectsNonPositiveRate) {
  IntervalParams p;
  p.lambda = 0.0;
  EXPECT_THROW(iss_envelope(p, 0.5), ParameterError);
  p.lambda = -1.0;
  EXPECT_THROW(iss_envelope(p, 0.5), ParameterError);
}

TEST(Envelope, MonotoneOnEachSideOfFixedPoint) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    IntervalParams p;
    p.lambda = u(gen);
    p.w_bar = u(gen);
    p.e0_norm = u(gen) * 2.0;
    const bool above = p.e0_norm >= p.w_bar / p.lambda;
    double prev = iss_envelope(p, 0.0);
    for (int i = 1; i <= 50; ++i) {
      const double v = iss_envelope(p, 0.1 * i);
      if (above)
        EXPECT_LE(v, prev + 1e-15);
      else
        EXPECT_GE(v, prev - 1e-15);
      prev = v;
    }
  }
}

TEST(Envelope, MatchesLongDoubleOracle) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.01, 4.0);
  for (int trial = 0; trial < 500; ++trial) {
    IntervalParams p;
    p.lambda = u(gen);
    p.w_bar = u(gen);
    p.e0_norm = u(gen);
    const double t = u(gen);
    const double ref = static_cast<double>(oracle::envelope_ld(p.lambda, p.w_bar, p.e0_norm, t));
    EXPECT_NEAR(iss_envelope(p, t), ref, 1e-13 * std::max(1.0, ref));
  }
}

TEST(Envelope, PureFunction) {
  IntervalParams p;
  p.lambda = 0.3;
  p.w_bar = 0.11;
  p.e0_norm = 0.9;
  const double a = iss_envelope(p, 1.234);
  const double b = iss_envelope(p, 1.234);
  EXPECT_EQ(std::bit_cast<std::uint64_t>(a), std::bit_cast<std::uint64_t>(b));
}

TEST(NodeEnvelope, SingleEdgeExample) {
  IntervalParams p;
  p.lambda = 1.0;
  p.nu_bar = 0.3;
  p.e0_norm = 2.0;
  const double expected = 2.0 * std::exp(-1.0) + 0.3 * (1.0 - std::exp(-1.0));
  EXPECT_NEAR(node_envelope(p, 1.0), expected, 1e-15);
  EXPECT_NEAR(node_envelope(p, 1.0), 0.9253, 1e-4);
}

TEST(NodeEnvelope, HomogeneousDecayAndStart) {
  IntervalParams p;
  p.lambda = 0.5;
  p.nu_bar = 0.0;
  p.e0_norm = 4.0;
  EXPECT_EQ(node_envelope(p, 0.0), 4.0);
  EXPECT_NEAR(node_envelope(p, 2.0), 4.0 * std::exp(-1.0), 1e-15);
}

TEST(NodeEnvelope, UnanchoredIsInapplicable) {
  IntervalParams p;
  EXPECT_THROW(node_envelope(p, 0.1, false), ParameterError);
}

TEST(EtaMax, DisturbanceFreeAlwaysFeasible) {
  IntervalParams p;
  p.lambda = 0.8;
  p.delta_t = 1.5;
  p.delta_z = 0.4;
  const EtaMax e = eta_max(p);
  EXPECT_TRUE(e.feasible);
  EXPECT_NEAR(e.threshold, std::exp(0.8 * 1.5) * 0.4, 1e-15);
}

TEST(EtaMax, BoundaryCaseIsInfeasible) {
  IntervalParams p;
  p.lambda = 1.0;
  p.delta_t = 1.0;
  p.delta_z = 0.5;
  p.eps_z = 0.5;
  p.w_bar = 0.2;
  const EtaMax e = eta_max(p);
  EXPECT_FALSE(e.feasible);
  EXPECT_NEAR(e.threshold, -0.2 * (std::exp(1.0) - 1.0), 1e-15);
  EXPECT_LE(e.threshold, 0.0);
}

TEST(EtaMax, WorkedExample) {
  IntervalParams p;
  p.lambda = 1.0;
  p.delta_t = 1.0;
  p.delta_z = 1.0;
  p.eps_z = 0.2;
  p.w_bar = 0.3;
  const EtaMax e = eta_max(p);
  EXPECT_TRUE(e.feasible);
  EXPECT_NEAR(e.threshold, std::exp(1.0) * 0.8 - 0.3 * (std::exp(1.0) - 1.0), 1e-15);
  EXPECT_NEAR(e.threshold, 1.6591, 5e-5);
}

TEST(EtaRecursion, WorkedExample) {
  HorizonParams h;
  h.alpha = 0.5;
  h.lambda_floor = 1.0;
  h.jump_bound = 0.25;
  h.eta0 = 4.0;
  h.K = 6;
  const EtaSequence s = eta_recursion(h, 1.0);
  ASSERT_EQ(s.iterates.size(), 7u);
  EXPECT_DOUBLE_EQ(s.iterates[1], 2.75);
  EXPECT_DOUBLE_EQ(s.eta_inf, 1.5);
  double eta = 4.0;
  for (int k = 0; k <= 6; ++k) {
    EXPECT_NEAR(s.iterates[static_cast<std::size_t>(k)], eta, 1e-12);
    EXPECT_NEAR(s.closed_form[static_cast<std::size_t>(k)], eta, 1e-12);
    eta = 0.5 * eta + 0.5 + 0.25;
  }
}

TEST(EtaRecursion, PureContractionAndFixedPoint) {
  HorizonParams h;
  h.alpha = 0.3;
  h.eta0 = 2.0;
  h.K = 8;
  const EtaSequence a = eta_recursion(h, 0.0);
  for (int k = 0; k <= 8; ++k) EXPECT_NEAR(a.iterates[static_cast<std::size_t>(k)], 2.0 * std::pow(0.3, k), 1e-15);

  h.jump_bound = 0.7;
  h.eta0 = 0.4 / h.lambda_floor + 0.7 / (1.0 - 0.3);
  const EtaSequence b = eta_recursion(h, 0.4);
  for (double v : b.iterates) EXPECT_NEAR(v, h.eta0, 1e-12);
}

TEST(EtaRecursion, RejectsAlphaAtOne) {
  HorizonParams h;
  h.alpha = 1.0;
  EXPECT_THROW(eta_recursion(h, 0.1), ParameterError);
}

TEST(Markov, WorkedExample) {
  HorizonParams h;
  h.markov_a = 0.2;
  h.markov_b = 0.6;
  h.p0 = 1.0;
  const MarkovWrong m = markov_wrong_prob(h, 1);
  EXPECT_DOUBLE_EQ(m.pi_wrong, 0.25);
  EXPECT_NEAR(m.p_k, 0.4, 1e-15);
  EXPECT_NEAR(m.p_k_recursion, 0.4, 1e-15);
}

TEST(Markov, StationaryStart) {
  HorizonParams h;
  h.markov_a = 0.3;
  h.markov_b = 0.45;
  h.p0 = 0.3 / 0.75;
  for (int k : {0, 1, 5, 40}) EXPECT_NEAR(markov_wrong_prob(h, k).p_k, h.p0, 1e-15);
}

TEST(Markov, DegenerateChainRejected) {
  HorizonParams h;
  h.markov_a = 0.0;
  h.markov_b = 0.0;
  EXPECT_THROW(markov_wrong_prob(h, 3), ParameterError);
}

TEST(Markov, ClosedFormMatchesRecursionOnRandomCases) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  std::uniform_int_distribution<int> steps(0, 200);
  for (int trial = 0; trial < 1000; ++trial) {
    HorizonParams h;
    h.markov_a = u(gen);
    h.markov_b = u(gen);
    h.p0 = u(gen);
    h.K = 1 + steps(gen);
    const int k = steps(gen);
    const MarkovWrong m = markov_wrong_prob(h, k);
    double p = h.p0;
    for (int j = 0; j < k; ++j) p = h.markov_a + (1.0 - h.markov_a - h.markov_b) * p;
    EXPECT_NEAR(m.p_k, p, 1e-12);
    EXPECT_NEAR(m.p_k_recursion, p, 1e-12);
    double sum = 0.0, q = h.p0;
    for (int j = 0; j < h.K; ++j) {
      sum += q;
      q = h.markov_a + (1.0 - h.markov_a - h.markov_b) * q;
    }
    EXPECT_NEAR(m.running_average, sum / h.K, 1e-12);
    EXPECT_NEAR(markov_running_average_direct(h), sum / h.K, 1e-12);
  }
}

TEST(Markov, MatchesSampledChains) {
  HorizonParams h;
  h.markov_a = 0.2;
  h.markov_b = 0.6;
  h.p0 = 0.9;
  for (int k : {1, 3, 10}) {
    const double freq = oracle::markov_frequency(h.markov_a, h.markov_b, h.p0, k, 100000, 42);
    EXPECT_NEAR(markov_wrong_prob(h, k).p_k, freq, 0.01) << k;
  }
}

TEST(Horizon, ReducesToTrackingTerm) {
  HorizonParams h;
  h.lambda_floor = 0.5;
  h.alpha = std::exp(-0.5);
  h.K = 10;
  h.eta0 = 0.0;
  const HorizonBound b = horizon_bound(h, 0.2, 1.0);
  EXPECT_NEAR(b.finite, 0.4, 1e-15);
  EXPECT_NEAR(b.asymptotic, 0.4, 1e-15);
}

TEST(Horizon, StationaryChainLimit) {
  HorizonParams h;
  h.lambda_floor = 0.38;
  const double delta = 1.0;
  h.alpha = std::exp(-0.38 * delta);
  h.jump_bound = 0.2;
  h.eps_correct = 0.05;
  h.eps_wrong = 0.5;
  h.markov_a = 0.2;
  h.markov_b = 0.6;
  h.p0 = 0.25;
  h.eta0 = 3.0;
  h.K = 1000000;
  const HorizonBound b = horizon_bound(h, 0.1, delta);
  const double asym = 0.1 / 0.38 + 0.2 / (0.38 * delta) + 0.05 + 0.25 * 0.45;
  EXPECT_NEAR(b.asymptotic, asym, 1e-12);
  EXPECT_NEAR(b.finite - b.transient_term, asym, 1e-12);
  EXPECT_NEAR(b.finite, b.tracking_term + b.gap_term + b.transient_term, 1e-15);
}

TEST(Horizon, FiniteTermsAssembleByHand) {
  HorizonParams h;
  h.lambda_floor = 0.4;
  h.alpha = std::exp(-0.8);
  h.jump_bound = 0.1;
  h.eps_correct = 0.02;
  h.eps_wrong = 0.3;
  h.markov_a = 0.1;
  h.markov_b = 0.5;
  h.p0 = 1.0;
  h.eta0 = 5.0;
  h.K = 12;
  const double delta = 2.0, w = 0.05;
  double avg = 0.0, p = 1.0;
  for (int j = 0; j < 12; ++j) {
    avg += p / 12.0;
    p = 0.1 + 0.4 * p;
  }
  const double eta_inf = w / 0.4 + 0.1 / (1.0 - h.alpha);
  const double expected = w / 0.4 + 0.1 / (0.4 * delta) + 0.02 + 0.28 * avg +
                          std::max(0.0, 5.0 - eta_inf) / (12 * 0.4 * delta);
  EXPECT_NEAR(horizon_bound(h, w, delta).finite, expected, 1e-12);
}
