#include <gtest/gtest.h>

#include <numeric>
#include <set>
#include <sstream>

#include "stochmatch/lp.hpp"
#include "stochmatch/oracles.hpp"
#include "stochmatch/sim.hpp"
#include "support.hpp"

using namespace stochmatch;
using testing_support::vertex_enumeration;

namespace {

Instance single_type(int n, const Distribution& law, Eigen::VectorXd rewards) {
  Instance inst;
  inst.rewards = rewards;
  inst.capacities.assign(static_cast<std::size_t>(n), 1);
  inst.demand = IndepDemandModel{{law}};
  return inst;
}

Distribution small_law() { return Distribution::from_map({{1, 0.5}, {2, 0.25}, {3, 0.25}}); }

}  // namespace

TEST(Simplex, TrivialPrograms) {
  Lp empty(0);
  const auto a = solve_lp(empty);
  EXPECT_EQ(a.status, LpStatus::Optimal);
  EXPECT_EQ(a.objective_value, 0.0);

  Lp one(1);
  one.objective << 1.0;
  one.add_row(Eigen::VectorXd::Ones(1), 3.0);
  const auto b = solve_lp(one);
  ASSERT_EQ(b.status, LpStatus::Optimal);
  EXPECT_NEAR(b.objective_value, 3.0, 1e-12);
}

TEST(Simplex, DetectsInfeasibleAndUnbounded) {
  Lp inf(1);
  inf.objective << 1.0;
  inf.add_row(-Eigen::VectorXd::Ones(1), -2.0);  // x >= 2
  inf.add_row(Eigen::VectorXd::Ones(1), 1.0);    // x <= 1
  EXPECT_EQ(solve_lp(inf).status, LpStatus::Infeasible);

  Lp unb(2);
  unb.objective << 1.0, 1.0;
  Eigen::VectorXd row(2);
  row << 1.0, -1.0;
  unb.add_row(row, 1.0);
  EXPECT_EQ(solve_lp(unb).status, LpStatus::Unbounded);
}

TEST(Simplex, NegativeRhsNeedsPhaseOne) {
  // max -x - y s.t. x + y >= 2, x <= 3.
  Lp lp(2);
  lp.objective << -1.0, -1.0;
  Eigen::VectorXd r(2);
  r << -1.0, -1.0;
  lp.add_row(r, -2.0);
  r << 1.0, 0.0;
  lp.add_row(r, 3.0);
  const auto s = solve_lp(lp);
  ASSERT_EQ(s.status, LpStatus::Optimal);
  EXPECT_NEAR(s.objective_value, -2.0, 1e-12);
}

TEST(Simplex, BealeCyclingExampleTerminates) {
  // Classic degenerate LP that cycles under the textbook rule.
  Lp lp(4);
  lp.objective << 0.75, -150.0, 0.02, -6.0;
  Eigen::VectorXd r(4);
  r << 0.25, -60.0, -0.04, 9.0;
  lp.add_row(r, 0.0);
  r << 0.5, -90.0, -0.02, 3.0;
  lp.add_row(r, 0.0);
  r << 0.0, 0.0, 1.0, 0.0;
  lp.add_row(r, 1.0);
  const auto s = solve_lp(lp);
  ASSERT_EQ(s.status, LpStatus::Optimal);
  EXPECT_NEAR(s.objective_value, 0.05, 1e-12);
}

TEST(Simplex, MatchesVertexEnumerationOnRandomPrograms) {
  Rng rng(31);
  for (int k = 0; k < 150; ++k) {
    const int n = 2 + static_cast<int>(rng.uniform_int(4));  // up to 5 variables
    const int m = 1 + static_cast<int>(rng.uniform_int(5));
    Lp lp(n);
    for (int v = 0; v < n; ++v) lp.objective(v) = rng.uniform() * 4 - 1;
    for (int row = 0; row < m; ++row) {
      Eigen::VectorXd a(n);
      for (int v = 0; v < n; ++v) a(v) = rng.bernoulli(0.2) ? 0.0 : rng.uniform() * 3 - 0.5;
      lp.add_row(a, rng.uniform() * 4 - (rng.bernoulli(0.2) ? 1.0 : 0.0));
    }
    // Box rows keep every instance bounded.
    for (int v = 0; v < n; ++v) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e(v) = 1.0;
      lp.add_row(e, 5.0);
    }
    const double want = vertex_enumeration(lp.objective, lp.constraints, lp.rhs);
    const auto got = solve_lp(lp);
    if (!std::isfinite(want)) {
      EXPECT_EQ(got.status, LpStatus::Infeasible);
      continue;
    }
    ASSERT_EQ(got.status, LpStatus::Optimal);
    EXPECT_NEAR(got.objective_value, want, 1e-7 * std::max(1.0, std::abs(want)));
    EXPECT_LE(max_violation(lp, got.values), 1e-9);
    EXPECT_GE(got.values.minCoeff(), -1e-9);
    // Weak duality certificate: b'u >= c'x with u >= 0 and A'u >= c.
    EXPECT_GE(got.duals.minCoeff(), -1e-9);
    EXPECT_NEAR(lp.rhs.dot(got.duals), got.objective_value, 1e-7);
    EXPECT_GE((lp.constraints.transpose() * got.duals - lp.objective).minCoeff(), -1e-7);
  }
}

TEST(Simplex, RationalModeIsExact) {
  using R = Rational;
  LinearProgram<R> lp(2);
  lp.objective << R(1), R(1);
  VectorX<R> row(2);
  row << R(1), R(2);
  lp.add_row(row, R(1));
  row << R(3), R(1);
  lp.add_row(row, R(1));
  const auto s = solve_lp(lp);
  ASSERT_EQ(s.status, LpStatus::Optimal);
  EXPECT_EQ(s.objective_value, R(3, 5));
  EXPECT_EQ(s.values(1), R(2, 5));
  EXPECT_EQ(s.values(0), R(1, 5));
}

TEST(FluidLp, Examples) {
  const Instance a = loose1_i(0.25);
  EXPECT_NEAR(solve_lp(build_fluid_lp(a)).objective_value, 1.0, 1e-12);

  Instance zero = main1tight(0.5, 2);
  zero.rewards.setZero();
  EXPECT_NEAR(solve_lp(build_fluid_lp(zero)).objective_value, 0.0, 1e-12);

  const Instance b = single_type(2, Distribution::point_mass(3), Eigen::VectorXd::Ones(2));
  EXPECT_NEAR(solve_lp(build_fluid_lp(b)).objective_value, 2.0, 1e-12);

  EXPECT_THROW(build_fluid_lp(threshold_family(3, 0.1)), std::invalid_argument);
}

TEST(Separation, Examples) {
  const Instance inst = single_type(2, small_law(), Eigen::VectorXd::Ones(2));
  EXPECT_TRUE(separation_oracle(Eigen::VectorXd::Zero(2), inst).feasible);
  Eigen::VectorXd x(2);
  x << 0.8, 0.8;
  const auto r = separation_oracle(x, inst);
  ASSERT_FALSE(r.feasible);
  EXPECT_EQ(r.cut.subset, (std::vector<int>{0, 1}));
  EXPECT_NEAR(r.cut.rhs, 1.5, 1e-12);
  EXPECT_NEAR(r.lhs, 1.6, 1e-12);
}

TEST(Separation, MatchesSubsetEnumeration) {
  Rng rng(41);
  RandomIndepOptions o;
  o.max_resources = 10;
  o.max_types = 3;
  o.max_support = 6;
  o.max_capacity = 3;
  for (int k = 0; k < 150; ++k) {
    const Instance inst = random_indep_instance(rng, o);
    const int n = inst.num_resources();
    const int m = inst.num_types();
    const Eigen::VectorXd x = random_candidate(rng, inst);
    bool violated = false;  // own 2^n loop, independent of the library's
    for (int j = 0; j < m && !violated; ++j) {
      const Distribution law = marginal(inst.demand, j);
      for (unsigned mask = 1; mask < (1u << n); ++mask) {
        double lhs = 0.0;
        int cap = 0;
        for (int i = 0; i < n; ++i) {
          if ((mask >> i) & 1u) {
            lhs += x(x_index(i, j, m));
            cap += inst.capacities[static_cast<std::size_t>(i)];
          }
        }
        if (lhs > law.truncated_expectation(cap) + 1e-9) {
          violated = true;
          break;
        }
      }
    }
    for (const auto rule : {SeparationRule::First, SeparationRule::MostViolated}) {
      EXPECT_EQ(separation_oracle(x, inst, rule).feasible, !violated);
    }
    EXPECT_EQ(exhaustive_separation(x, inst).feasible, !violated);
  }
}

TEST(TruncatedLp, Examples) {
  const Instance a = single_type(3, small_law(), Eigen::VectorXd::Ones(3));
  EXPECT_NEAR(build_truncated_lp(a).solution.objective_value, 1.75, 1e-9);
  const Instance b = loose1_ii(10);
  EXPECT_NEAR(build_truncated_lp(b).solution.objective_value, 0.1, 1e-9);
  EXPECT_NEAR(expected_offline(b).value, 0.1, 1e-9);
}

TEST(TruncatedLp, CuttingPlaneMatchesFullLpAndIsFeasible) {
  Rng rng(43);
  RandomIndepOptions o;
  o.max_resources = 5;
  o.max_types = 3;
  o.max_support = 5;
  o.max_capacity = 2;
  for (int k = 0; k < 60; ++k) {
    const Instance inst = random_indep_instance(rng, o);
    const auto cut = build_truncated_lp(inst);
    ASSERT_EQ(cut.solution.status, LpStatus::Optimal);
    const auto full = solve_lp(build_full_truncated_lp(inst));
    EXPECT_NEAR(cut.solution.objective_value, full.objective_value, 1e-8);
    EXPECT_TRUE(exhaustive_separation(cut.solution.values, inst).feasible);
    EXPECT_LE(cut.solution.objective_value, solve_lp(build_fluid_lp(inst)).objective_value + 1e-9);
    std::set<std::pair<int, std::vector<int>>> seen;
    for (const auto& c : cut.pool.cuts()) EXPECT_TRUE(seen.insert({c.type, c.subset}).second);
  }
}

TEST(TruncatedLp, FullFamilyIsFeasibleForLargerN) {
  Rng rng(47);
  RandomIndepOptions o;
  o.max_resources = 12;
  o.max_types = 2;
  o.max_support = 8;
  for (int k = 0; k < 10; ++k) {
    const Instance inst = random_indep_instance(rng, o);
    const auto cut = build_truncated_lp(inst);
    ASSERT_EQ(cut.solution.status, LpStatus::Optimal);
    EXPECT_TRUE(exhaustive_separation(cut.solution.values, inst).feasible);
  }
}

TEST(TruncatedLp, PrefixConstraintsBindForSingleType) {
  Rng rng(53);
  for (int k = 0; k < 40; ++k) {
    const int n = 1 + static_cast<int>(rng.uniform_int(5));
    std::vector<double> pmf(1 + rng.uniform_int(6));
    double total = 0.0;
    for (auto& p : pmf) total += (p = 0.05 + rng.uniform());
    for (auto& p : pmf) p /= total;
    const Distribution law(pmf);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r(i) = 0.1 + rng.uniform();
    const Instance inst = single_type(n, law, r);
    const auto sol = build_truncated_lp(inst).solution;
    // Sorting by reward, the greedy fills each prefix to its bound.
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return r(a) > r(b); });
    double prefix = 0.0;
    for (int k2 = 0; k2 < n; ++k2) {
      prefix += sol.values(idx[static_cast<std::size_t>(k2)]);
      EXPECT_NEAR(prefix, law.truncated_expectation(k2 + 1), 1e-9);
    }
    std::vector<double> x(sol.values.data(), sol.values.data() + n);
    std::sort(x.begin(), x.end(), std::greater<>());
    double run = 0.0;
    for (int k2 = 0; k2 < n; ++k2) {
      run += x[static_cast<std::size_t>(k2)];
      EXPECT_NEAR(run, law.truncated_expectation(k2 + 1), 1e-9);
    }
  }
}

TEST(TruncatedLp, AcceptsCorrelMarginals) {
  const Instance inst = main2tight(3);
  const auto t = build_truncated_lp(inst);
  ASSERT_EQ(t.solution.status, LpStatus::Optimal);
  EXPECT_GE(t.solution.objective_value + 1e-9, expected_offline(inst).value);
}

TEST(ConditionalLp, Examples) {
  Instance one;
  one.rewards.resize(2, 2);
  one.rewards << 1, 2, 3, 0.5;
  one.capacities = {1, 1};
  StochasticHorizonModel h{Distribution::point_mass(1), Eigen::MatrixXd(1, 2)};
  h.probs << 0.4, 0.6;
  one.demand = h;
  Instance fluid = one;
  fluid.demand = IndepDemandModel{{Distribution::from_map({{0, 0.6}, {1, 0.4}}), Distribution::from_map({{0, 0.4}, {1, 0.6}})}};
  EXPECT_NEAR(solve_conditional_lp(one).objective_value, solve_lp(build_fluid_lp(fluid)).objective_value, 1e-9);

  EXPECT_GE(solve_conditional_lp(main2tight(10)).objective_value, 2.0 - 1e-3);

  Instance zero = main2tight(4);
  zero.rewards.setZero();
  EXPECT_NEAR(solve_conditional_lp(zero).objective_value, 0.0, 1e-12);
}

TEST(ConditionalLp, MatchesVertexEnumerationAtN3) {
  const Lp lp = build_conditional_lp(main2tight(3));
  // 10 steps x 2 types: too many variables to enumerate vertices directly,
  // so check optimality through the dual instead.
  const auto s = solve_lp(lp);
  ASSERT_EQ(s.status, LpStatus::Optimal);
  EXPECT_GE(s.duals.minCoeff(), -1e-9);
  EXPECT_NEAR(lp.rhs.dot(s.duals), s.objective_value, 1e-9);
  EXPECT_GE((lp.constraints.transpose() * s.duals - lp.objective).minCoeff(), -1e-9);
  EXPECT_LE(max_violation(lp, s.values), 1e-9);

  const Lp small = build_conditional_lp(main2tight(2));  // 5 steps x 2 types = 10 variables
  EXPECT_NEAR(solve_lp(small).objective_value, vertex_enumeration(small.objective, small.constraints, small.rhs), 1e-9);
}

TEST(ConditionalLp, UpperBoundsOpt) {
  Rng rng(59);
  for (int k = 0; k < 100; ++k) {
    const Instance inst = random_horizon_instance(rng);
    EXPECT_LE(optimal_online_dp(inst).value, solve_conditional_lp(inst).objective_value + 1e-9);
  }
}

TEST(LpOutput, TableauAndCsv) {
  const Instance inst = single_type(2, small_law(), Eigen::VectorXd::Ones(2));
  const Lp lp = build_fluid_lp(inst);
  std::ostringstream t;
  write_tableau(t, lp);
  EXPECT_EQ(t.str(),
            "maximize +1 x[1,1] +1 x[2,1]\n"
            "subject to\n"
            "  capacity[1]: +1 x[1,1] <= 1\n"
            "  capacity[2]: +1 x[2,1] <= 1\n"
            "  demand[1]: +1 x[1,1] +1 x[2,1] <= 1.75\n"
            "variables 2 >= 0, rows 3\n");
  std::ostringstream c;
  write_solution_csv(c, lp, solve_lp(lp));
  EXPECT_EQ(c.str().substr(0, 15), "variable,value\n");
}
