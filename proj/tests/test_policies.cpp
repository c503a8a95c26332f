#include <gtest/gtest.h>

#include <sstream>

#include "stochmatch/ocrs.hpp"
#include "stochmatch/oracles.hpp"
#include "stochmatch/policies.hpp"
#include "stochmatch/sampling.hpp"
#include "stochmatch/sim.hpp"

using namespace stochmatch;

namespace {

Instance one_by_one(double reward, const Distribution& law, int capacity = 1) {
  Instance inst;
  inst.rewards = Eigen::MatrixXd::Constant(1, 1, reward);
  inst.capacities = {capacity};
  inst.demand = IndepDemandModel{{law}};
  return inst;
}

Instance horizon_instance(Eigen::MatrixXd rewards, std::vector<int> caps, Distribution total, Eigen::MatrixXd probs) {
  Instance inst;
  inst.rewards = std::move(rewards);
  inst.capacities = std::move(caps);
  inst.demand = StochasticHorizonModel{std::move(total), std::move(probs)};
  return inst;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST(ThresholdPolicy, ThresholdIsHalfTheLpContribution) {
  const auto plan = plan_threshold_policy(one_by_one(1.0, Distribution::point_mass(1)));
  ASSERT_EQ(plan->num_units(), 1);
  EXPECT_NEAR(plan->x(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(plan->thresholds[0], 0.5, 1e-12);

  Rng rng(3);
  Instance zero = random_indep_instance(rng);
  zero.rewards.setZero();
  const auto zero_plan = plan_threshold_policy(zero);
  for (const double t : zero_plan->thresholds) EXPECT_EQ(t, 0.0);
}

TEST(ThresholdPolicy, TiesAreAccepted) {
  // r = 1 and x* = 1/2 give tau = 1/4; a second resource with reward
  // exactly tau must still accept.
  Instance inst;
  inst.rewards.resize(1, 2);
  inst.rewards << 0.5, 0.25;
  inst.capacities = {1};
  inst.demand = IndepDemandModel{{Distribution::from_map({{0, 0.5}, {1, 0.5}}), Distribution::from_map({{0, 0.5}, {1, 0.5}})}};
  const auto plan = plan_threshold_policy(inst);
  const double tau = plan->thresholds[0];
  EXPECT_NEAR(tau, 0.5 * (0.5 * plan->x(0, 0) + 0.25 * plan->x(0, 1)), 1e-12);
  auto p2 = std::make_shared<ThresholdPolicyPlan>(*plan);
  p2->thresholds[0] = 0.25;
  EXPECT_TRUE(p2->eligible(0, 1));
  p2->thresholds[0] = 0.25 + 1e-6;
  EXPECT_FALSE(p2->eligible(0, 1));
}

TEST(ThresholdPolicy, IdleRankAndOverflowAreRejected) {
  const auto plan = plan_threshold_policy(one_by_one(1.0, Distribution::from_map({{1, 0.5}, {2, 0.5}})));
  ThresholdPolicyState st;
  st.plan = plan;
  st.routing = {Routing{{kIdle, 0}}};
  st.seen = {0};
  st.available = {true};
  const Decision first = threshold_policy_step(st, 0);
  EXPECT_FALSE(first.accepted);
  EXPECT_EQ(first.resource, kRejected);
  const Decision second = threshold_policy_step(st, 0);
  EXPECT_TRUE(second.accepted);
  EXPECT_EQ(second.resource, 0);
  const Decision third = threshold_policy_step(st, 0);  // past the routed ranks
  EXPECT_FALSE(third.accepted);
}

TEST(ThresholdPolicy, TakenUnitRejectsLaterRoutings) {
  Instance inst;
  inst.rewards = Eigen::MatrixXd::Ones(1, 2);
  inst.capacities = {1};
  inst.demand = IndepDemandModel{{Distribution::from_map({{0, 0.5}, {1, 0.5}}), Distribution::from_map({{0, 0.5}, {1, 0.5}})}};
  ThresholdPolicyState st;
  st.plan = plan_threshold_policy(inst);
  st.routing = {Routing{{0}}, Routing{{0}}};
  st.seen = {0, 0};
  st.available = {true};
  EXPECT_TRUE(threshold_policy_step(st, 1).accepted);
  EXPECT_FALSE(threshold_policy_step(st, 0).accepted);
}

TEST(ThresholdPolicy, RejectsNonIndepDemand) {
  EXPECT_THROW(plan_threshold_policy(main2tight(3)), std::invalid_argument);
}

TEST(ThresholdPolicy, SamplePathDominatesThresholdProphet) {
  // Per unit: reward collected >= smallest routed X_ij that clears tau.
  Rng rng(89);
  RandomIndepOptions o;
  o.max_resources = 4;
  o.max_types = 3;
  o.max_support = 4;
  int paths = 0;
  for (int k = 0; k < 60; ++k) {
    const Instance inst = random_indep_instance(rng, o);
    const auto plan = plan_threshold_policy(inst);
    const int units = plan->num_units();
    const int m = inst.num_types();
    for (int s = 0; s < 50; ++s, ++paths) {
      ThresholdPolicyState st = start_threshold_policy(plan, rng);
      const RealizedDemand d = sample_demand(inst.demand, m, rng);
      const ArrivalSequence order = sample_random_order(d, rng);
      std::vector<double> collected(static_cast<std::size_t>(units), 0.0);
      std::vector<int> seen(static_cast<std::size_t>(m), 0);
      for (const int j : order.types) {
        const auto& a = st.routing[static_cast<std::size_t>(j)].assignment;
        const int rank = seen[static_cast<std::size_t>(j)]++;
        const int unit = rank < static_cast<int>(a.size()) ? a[static_cast<std::size_t>(rank)] : kIdle;
        const Decision dec = threshold_policy_step(st, j);
        if (dec.accepted) collected[static_cast<std::size_t>(unit)] += dec.reward;
      }
      for (int u = 0; u < units; ++u) {
        double prophet = 0.0;
        bool any = false;
        for (int j = 0; j < m; ++j) {
          const auto& a = st.routing[static_cast<std::size_t>(j)].assignment;
          bool routed = false;
          for (int l = 0; l < d.counts[static_cast<std::size_t>(j)] && l < static_cast<int>(a.size()); ++l) {
            routed = routed || a[static_cast<std::size_t>(l)] == u;
          }
          const double X = routed ? plan->expanded.instance.rewards(u, j) : 0.0;
          if (routed && X >= plan->thresholds[static_cast<std::size_t>(u)] - 1e-12) {
            prophet = any ? std::min(prophet, X) : X;
            any = true;
          }
        }
        ASSERT_GE(collected[static_cast<std::size_t>(u)], prophet - 1e-12) << "instance " << k << " unit " << u;
      }
    }
  }
  EXPECT_EQ(paths, 3000);
}

TEST(ThresholdPolicy, CapacityIsExpandedIntoUnits) {
  const auto plan = plan_threshold_policy(one_by_one(1.0, Distribution::point_mass(3), 2));
  EXPECT_EQ(plan->num_units(), 2);
  EXPECT_EQ(plan->expanded.parent, (std::vector<int>{0, 0}));
  Rng rng(2);
  ThresholdPolicy policy(plan);
  const PolicyTrace tr = run_policy(policy, {0, 0, 0}, rng);
  EXPECT_EQ(tr.total_reward(), 2.0);
}

// ---------------------------------------------------------------------------

TEST(Ocrs, SingleStepAndTwoStepExamples) {
  const OcrsPlan a = ocrs_plan({1.0}, 1);
  EXPECT_NEAR(a.gamma, 1.0, 1e-9);
  EXPECT_NEAR(a.accept[0], 1.0, 1e-9);
  EXPECT_TRUE(a.meets_bound);

  const OcrsPlan b = ocrs_plan({0.5, 0.5}, 1);
  EXPECT_NEAR(b.gamma, 2.0 / 3.0, 1e-8);
  EXPECT_NEAR(b.accept[0], 2.0 / 3.0, 1e-8);
  EXPECT_NEAR(b.accept[1], 1.0, 1e-8);
  EXPECT_NEAR(b.availability[1], 1.0 - b.gamma / 2.0, 1e-12);

  const OcrsPlan c = ocrs_plan({1.0, 1.0}, 2);
  EXPECT_GE(c.gamma, 1.0 - 1.0 / std::sqrt(5.0));
  EXPECT_NEAR(ocrs_bound(2), 1.0 - 1.0 / std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(ocrs_bound(1), 0.5, 1e-15);
}

TEST(Ocrs, RejectsBadRates) {
  EXPECT_THROW(ocrs_plan({0.7, 0.7}, 1), std::invalid_argument);
  EXPECT_THROW(ocrs_plan({1.5}, 2), std::invalid_argument);
  EXPECT_THROW(ocrs_plan({-0.1}, 1), std::invalid_argument);
  EXPECT_NO_THROW(ocrs_plan({}, 1));
}

TEST(Ocrs, UnconditionalAcceptanceIsGammaTimesRate) {
  Rng rng(97);
  for (int k = 0; k < 300; ++k) {
    const int cap = 1 + static_cast<int>(rng.uniform_int(6));
    const int T = 1 + static_cast<int>(rng.uniform_int(12));
    std::vector<double> r(static_cast<std::size_t>(T));
    double total = 0.0;
    for (auto& y : r) total += (y = rng.bernoulli(0.2) ? 0.0 : rng.uniform());
    const double scale = rng.uniform() * cap / std::max(total, 1e-9);
    for (auto& y : r) y = std::min(1.0, y * std::min(1.0, scale));
    const OcrsPlan plan = ocrs_plan(r, cap);
    const auto acc = ocrs_acceptance(plan);
    for (int t = 0; t < T; ++t) {
      EXPECT_NEAR(acc[static_cast<std::size_t>(t)], plan.gamma * r[static_cast<std::size_t>(t)], 1e-9);
      EXPECT_GE(plan.accept[static_cast<std::size_t>(t)], 0.0);
      EXPECT_LE(plan.accept[static_cast<std::size_t>(t)], 1.0 + 1e-12);
    }
    EXPECT_EQ(plan.meets_bound, plan.gamma >= ocrs_bound(cap) - 1e-9);
    if (cap == 1) {
      EXPECT_GE(plan.gamma, 0.5 - 1e-9);
    }
  }
}

TEST(Ocrs, AcceptanceMatchesSimulation) {
  const OcrsPlan plan = ocrs_plan({0.3, 0.6, 0.5, 0.4, 0.2}, 2);
  Rng rng(101);
  const int trials = 200000;
  std::vector<int> hits(5, 0);
  for (int s = 0; s < trials; ++s) {
    int used = 0;
    for (int t = 0; t < 5; ++t) {
      if (!rng.bernoulli(plan.rates[static_cast<std::size_t>(t)])) continue;
      if (used < 2 && rng.bernoulli(plan.accept[static_cast<std::size_t>(t)])) {
        ++used;
        ++hits[static_cast<std::size_t>(t)];
      }
    }
  }
  for (int t = 0; t < 5; ++t) {
    const double p = plan.gamma * plan.rates[static_cast<std::size_t>(t)];
    EXPECT_NEAR(hits[static_cast<std::size_t>(t)] / double(trials), p, 4 * std::sqrt(p * (1 - p) / trials));
  }
}

// ---------------------------------------------------------------------------

TEST(HorizonPolicy, SingleStep) {
  Eigen::MatrixXd probs(1, 1);
  probs << 1.0;
  const auto plan = build_horizon_policy(horizon_instance(Eigen::MatrixXd::Constant(1, 1, 2.0), {1}, Distribution::point_mass(1), probs));
  EXPECT_EQ(plan->horizon(), 1);
  ASSERT_EQ(plan->ocrs.size(), 1u);
  EXPECT_NEAR(plan->ocrs[0].rates[0], 1.0, 1e-12);
  EXPECT_NEAR(exact_policy_value(*plan), 2.0 * plan->ocrs[0].gamma, 1e-12);
}

TEST(HorizonPolicy, RoutingProbabilitiesAreALaw) {
  const auto plan = build_horizon_policy(main2tight(3));
  for (const auto& route : plan->route) {
    EXPECT_GE(route.minCoeff(), 0.0);
    EXPECT_LE(route.maxCoeff(), 1.0);
    for (Eigen::Index j = 0; j < route.cols(); ++j) EXPECT_LE(route.col(j).sum(), 1.0 + 1e-12);
  }
}

TEST(HorizonPolicy, ZeroRewardsAndBadArrivals) {
  Instance zero = main2tight(3);
  zero.rewards.setZero();
  EXPECT_EQ(exact_policy_value(*build_horizon_policy(zero)), 0.0);

  Eigen::MatrixXd probs(2, 2);
  probs << 1.0, 0.0, 0.5, 0.5;
  const auto plan = build_horizon_policy(horizon_instance(Eigen::MatrixXd::Ones(1, 2), {1}, Distribution::point_mass(2), probs));
  HorizonPolicyState st = start_horizon_policy(plan);
  Rng rng(1);
  EXPECT_THROW(horizon_policy_step(st, 0, 1, rng), std::logic_error);
  EXPECT_THROW(horizon_policy_step(st, 2, 0, rng), std::out_of_range);
  EXPECT_THROW(build_horizon_policy(one_by_one(1.0, Distribution::point_mass(1))), std::invalid_argument);
}

TEST(HorizonPolicy, ExactValueHasClosedForm) {
  Rng rng(103);
  for (int k = 0; k < 150; ++k) {
    const Instance inst = random_horizon_instance(rng);
    const auto plan = build_horizon_policy(inst);
    const int n = inst.num_resources();
    const int m = inst.num_types();
    double closed = 0.0;
    for (int t = 0; t < plan->horizon(); ++t) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
          const double y = plan->route[static_cast<std::size_t>(t)](i, j) * plan->model.probs(t, j);
          closed += plan->model.total.survival(t + 1) * inst.rewards(i, j) * y * plan->ocrs[static_cast<std::size_t>(i)].gamma;
        }
      }
    }
    EXPECT_NEAR(exact_policy_value(*plan), closed, 1e-9);
  }
}

TEST(HorizonPolicy, MonteCarloAcceptanceMeetsBound) {
  const Instance inst = main2tight(3);
  const auto plan = build_horizon_policy(inst);
  const int T = plan->horizon();
  const int n = inst.num_resources();
  const int trials = 100000;
  std::vector<int> hits(static_cast<std::size_t>(T * n), 0);
  Rng rng(107);
  HorizonPolicy policy(plan);
  for (int s = 0; s < trials; ++s) {
    const auto steps = sample_horizon_steps(plan->model, rng);
    policy.begin(rng);
    for (int t = 0; t < static_cast<int>(steps.size()); ++t) {
      const Decision d = policy.step(t, steps[static_cast<std::size_t>(t)], rng);
      if (d.accepted) ++hits[static_cast<std::size_t>(t * n + d.resource)];
    }
  }
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      const double bound = plan->model.total.survival(t + 1) * plan->ocrs[static_cast<std::size_t>(i)].gamma *
                           plan->ocrs[static_cast<std::size_t>(i)].rates[static_cast<std::size_t>(t)];
      const double f = hits[static_cast<std::size_t>(t * n + i)] / double(trials);
      const double se = std::sqrt(std::max(f * (1 - f), 1e-12) / trials);
      EXPECT_GE(f, bound - 4 * se) << "t " << t << " i " << i;
    }
  }
}

TEST(HorizonPolicy, LongerHorizonsMeetTheGammaBound) {
  // Short horizons leave k = 4 slack; T up to 12 makes the capacity bind.
  Rng rng(109);
  for (const int k : {2, 4}) {
    RandomHorizonOptions o;
    o.max_horizon = 12;
    o.max_resources = 2;
    o.max_types = 2;
    o.fixed_capacity = k;
    int binding = 0;
    for (int s = 0; s < 60; ++s) {
      const Instance inst = random_horizon_instance(rng, o);
      const auto plan = build_horizon_policy(inst);
      const double lp = plan->lp.objective_value;
      const double v = exact_policy_value(*plan);
      EXPECT_GE(v, ocrs_bound(k) * lp - 1e-9);
      for (const auto& oc : plan->ocrs) {
        EXPECT_TRUE(oc.meets_bound) << "k " << k << " gamma " << oc.gamma;
        binding += oc.gamma < 1.0 - 1e-9 ? 1 : 0;
      }
    }
    EXPECT_GT(binding, 0) << "k " << k;
  }
}

// ---------------------------------------------------------------------------

TEST(StaticThreshold, ZeroAndInfinity) {
  Instance inst = main2tight(3);
  inst.rewards.resize(1, 2);
  inst.rewards << 1.0, 3.0;
  inst.capacities = {2};
  auto zero = static_threshold_policy(inst, 0.0);
  Rng rng(5);
  EXPECT_EQ(run_policy(*zero, {0, 1, 1, 0}, rng).total_reward(), 4.0);
  auto inf = static_threshold_policy(inst, kInfiniteThreshold);
  EXPECT_EQ(run_policy(*inf, {0, 1, 1, 0}, rng).total_reward(), 0.0);
  auto mid = static_threshold_policy(inst, 2.0);
  EXPECT_EQ(run_policy(*mid, {0, 1, kNoQuery, 0, 1, 1}, rng).total_reward(), 6.0);
  EXPECT_EQ(static_threshold_value(inst, kInfiniteThreshold), 0.0);
  inst.rewards.resize(2, 2);
  inst.capacities = {1, 1};
  EXPECT_THROW(static_threshold_policy(inst, 0.0), std::invalid_argument);
}

TEST(StaticThreshold, ExactMatchesSimulation) {
  const Instance inst = threshold_family(4, 0.3);
  const StochasticHorizonModel plan_model = to_horizon(inst.demand);
  for (const double th : {0.0, 1.0 / 0.3, 1.0 / 0.09}) {
    auto policy = static_threshold_policy(inst, th);
    Rng rng(113);
    const int trials = 100000;
    double sum = 0.0;
    double sq = 0.0;
    for (int s = 0; s < trials; ++s) {
      const PolicyTrace tr = run_policy(*policy, sample_horizon_steps(plan_model, rng), rng);
      sum += tr.total_reward();
      sq += tr.total_reward() * tr.total_reward();
    }
    const double mean = sum / trials;
    const double se = std::sqrt(std::max(sq / trials - mean * mean, 0.0) / trials);
    EXPECT_NEAR(static_threshold_value(inst, th), mean, 4 * se + 1e-12) << th;
  }
}

TEST(Trace, CsvFormat) {
  Instance inst = main2tight(3);
  inst.rewards.resize(1, 2);
  inst.rewards << 1.0, 3.0;
  inst.capacities = {1};
  auto p = static_threshold_policy(inst, 2.0);
  Rng rng(1);
  const PolicyTrace tr = run_policy(*p, {0, kNoQuery, 1}, rng);
  std::ostringstream out;
  write_trace_csv(out, tr);
  EXPECT_EQ(out.str(),
            "step,type,resource,accepted,reward\n"
            "1,1,1,0,0.000000\n"
            "2,none,none,0,0.000000\n"
            "3,2,1,1,3.000000\n");
}
