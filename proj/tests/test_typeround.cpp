#include <gtest/gtest.h>

#include <map>
#include <numeric>

#include "stochmatch/io.hpp"
#include "stochmatch/lp.hpp"
#include "stochmatch/reproduce.hpp"
#include "stochmatch/sim.hpp"
#include "stochmatch/typeround.hpp"

using namespace stochmatch;
using R = Rational;

TEST(TypeRound, ThreeResourceGolden) {
  const InstanceFile f = load_example("three-unit");
  const auto& law = f.exact_laws.front();
  const auto plan = typeround<R>(*f.column, law);
  const auto rd = plan.expand();
  ASSERT_EQ(rd.branches.size(), 4u);
  EXPECT_EQ(rd.probability_of(Routing{{0, 1, 2}}), R(5, 12));
  EXPECT_EQ(rd.probability_of(Routing{{1, 0, 2}}), R(5, 12));
  EXPECT_EQ(rd.probability_of(Routing{{0, 2, 1}}), R(1, 12));
  EXPECT_EQ(rd.probability_of(Routing{{2, 0, 1}}), R(1, 12));
  const auto rep = verify_marginals(rd, *f.column, law);
  EXPECT_EQ(rep.max_error, R(0));
  EXPECT_EQ(format_routing(Routing{{0, kIdle, 2}}), "(1,-,3)");
}

TEST(TypeRound, FiveResourcePartialGolden) {
  const InstanceFile f = load_example("five-unit");
  const auto plan = typeround<R>(*f.column, f.exact_laws.front());
  const auto st = plan.project(plan.state_at(3).branches);
  ASSERT_EQ(st.branches.size(), 4u);
  EXPECT_EQ(st.probability_of(Routing{{2, 1, kIdle, 0, kIdle}}), R(2, 5));
  EXPECT_EQ(st.probability_of(Routing{{2, kIdle, 1, 0, kIdle}}), R(2, 5));
  EXPECT_EQ(st.probability_of(Routing{{kIdle, 2, 1, 0, kIdle}}), R(1, 10));
  EXPECT_EQ(st.probability_of(Routing{{kIdle, 1, 2, 0, kIdle}}), R(1, 10));
  EXPECT_EQ(plan.real_segments(3), 2);
  for (int t = 0; t <= 5; ++t) EXPECT_TRUE(check_invariants(plan, t).ok) << t;
}

TEST(TypeRound, RandomRationalColumnsKeepInvariants) {
  Rng rng(61);
  for (int k = 0; k < 300; ++k) {
    const RationalColumn col = random_feasible_column(rng, 6, 6);
    const auto plan = typeround<R>(col.x, col.law);
    for (int t = 0; t <= static_cast<int>(col.x.size()); ++t) {
      const auto rep = check_invariants(plan, t);
      ASSERT_TRUE(rep.ok) << rep.failure;
    }
    EXPECT_EQ(verify_marginals(plan.expand(), col.x, col.law).max_error, R(0));
  }
}

TEST(TypeRound, AnyProcessingOrderWorks) {
  Rng rng(67);
  for (int k = 0; k < 100; ++k) {
    const RationalColumn col = random_feasible_column(rng, 5, 5);
    std::vector<int> order(col.x.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t a = order.size(); a > 1; --a) std::swap(order[a - 1], order[rng.uniform_int(a)]);
    const auto plan = typeround<R>(col.x, col.law, order);
    EXPECT_EQ(verify_marginals(plan.expand(), col.x, col.law).max_error, R(0));
    for (std::size_t t = 0; t < order.size(); ++t) EXPECT_EQ(plan.stages()[t].resource, order[t]);
  }
}

TEST(TypeRound, DoubleColumnsFromTheTruncatedLp) {
  Rng rng(71);
  RandomIndepOptions o;
  o.max_resources = 6;
  o.max_types = 3;
  o.max_support = 6;
  for (int k = 0; k < 80; ++k) {
    const Instance inst = random_indep_instance(rng, o);
    const auto sol = build_truncated_lp(inst).solution;
    const int n = inst.num_resources();
    const int m = inst.num_types();
    for (int j = 0; j < m; ++j) {
      std::vector<double> x(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = std::max(0.0, sol.values(x_index(i, j, m)));
      const Distribution law = marginal(inst.demand, j);
      const auto plan = typeround<double>(x, law, {}, 1e-9);
      EXPECT_LE(verify_marginals(plan.expand(), x, law).max_error, 1e-9);
      for (const auto& st : plan.stages()) {
        EXPECT_GE(st.lambda, 0.0);
        EXPECT_LE(st.lambda, 1.0);
      }
    }
  }
}

TEST(TypeRound, InfeasibleColumnIsReported) {
  const Distribution one = Distribution::point_mass(1);
  try {
    typeround<double>({0.6, 0.6}, one);
    FAIL() << "expected InfeasibleColumn";
  } catch (const InfeasibleColumn& e) {
    EXPECT_EQ(e.stage(), 1);
  }
  EXPECT_THROW(typeround<double>({-0.1}, one), std::invalid_argument);
  EXPECT_THROW(typeround<double>({0.1, 0.1}, one, {0, 0}), std::invalid_argument);
  EXPECT_THROW(typeround<R>({R(1, 2), R(1, 2), R(1, 100)}, DemandDistribution<R>::point_mass(1)), InfeasibleColumn);
}

TEST(TypeRound, RankProbabilitiesMatchExpansion) {
  Rng rng(73);
  for (int k = 0; k < 200; ++k) {
    const RationalColumn col = random_feasible_column(rng, 6, 6);
    const auto plan = typeround<R>(col.x, col.law);
    const auto rp = plan.rank_probabilities();
    const auto rd = plan.expand();
    for (int i = 0; i < plan.num_resources(); ++i) {
      for (int rank = 0; rank < plan.real_ranks(); ++rank) {
        R direct(0);
        for (const auto& b : rd.branches) {
          if (b.routing.assignment[static_cast<std::size_t>(rank)] == i) direct += b.probability;
        }
        ASSERT_EQ(rp[static_cast<std::size_t>(i)][static_cast<std::size_t>(rank)], direct);
      }
    }
  }
}

TEST(TypeRound, SamplingFollowsTheLaw) {
  const InstanceFile f = load_example("five-unit");
  std::vector<double> x;
  for (const auto& v : *f.column) x.push_back(to_double(v));
  const Distribution law = f.exact_laws.front().cast<double>();
  const auto plan = typeround<double>(x, law);
  const auto rd = plan.expand();
  std::map<Routing, int> hits;
  Rng rng(79);
  const int trials = 200000;
  for (int s = 0; s < trials; ++s) ++hits[plan.sample(rng)];
  for (const auto& b : rd.branches) {
    const double p = b.probability;
    const double se = std::sqrt(p * (1 - p) / trials);
    EXPECT_NEAR(hits[b.routing] / double(trials), p, 5 * se + 1e-12) << format_routing(b.routing);
  }
  int covered = 0;
  for (const auto& b : rd.branches) covered += hits[b.routing];
  EXPECT_EQ(covered, trials);  // nothing outside the support
}
