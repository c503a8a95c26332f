#pragma once

// Independent reference computations used only by the tests. None of them
// call into the library's solvers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "stochmatch/instance.hpp"
#include "stochmatch/policies.hpp"
#include "stochmatch/rng.hpp"

namespace testing_support {

using namespace stochmatch;

/// max c'x s.t. Ax <= b, x >= 0 by enumerating every vertex (choose n tight
/// constraints among the m rows and n bounds). Bounded problems only; returns
/// -inf if infeasible.
inline double vertex_enumeration(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(A.rows());
  const int total = m + n;
  Eigen::MatrixXd all(total, n);
  Eigen::VectorXd rhs(total);
  all.topRows(m) = A;
  rhs.head(m) = b;
  all.bottomRows(n) = -Eigen::MatrixXd::Identity(n, n);
  rhs.tail(n).setZero();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> pick(static_cast<std::size_t>(n));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Eigen::MatrixXd M(n, n);
      Eigen::VectorXd r(n);
      for (int k = 0; k < n; ++k) {
        M.row(k) = all.row(pick[static_cast<std::size_t>(k)]);
        r(k) = rhs(pick[static_cast<std::size_t>(k)]);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
      if (lu.rank() < n) return;
      const Eigen::VectorXd x = lu.solve(r);
      if (((all * x - rhs).array() > 1e-9).any()) return;
      best = std::max(best, c.dot(x));
      return;
    }
    for (int k = start; k < total; ++k) {
      pick[static_cast<std::size_t>(depth)] = k;
      rec(k + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

/// Offline optimum by trying every resource (or none) for every query.
inline double brute_force_offline(const Instance& inst, const RealizedDemand& d) {
  std::vector<int> queries;
  for (int j = 0; j < inst.num_types(); ++j) {
    for (int c = 0; c < d.counts[static_cast<std::size_t>(j)]; ++c) queries.push_back(j);
  }
  std::vector<int> left = inst.capacities;
  std::function<double(std::size_t)> rec = [&](std::size_t q) -> double {
    if (q == queries.size()) return 0.0;
    double best = rec(q + 1);
    for (int i = 0; i < inst.num_resources(); ++i) {
      if (left[static_cast<std::size_t>(i)] == 0) continue;
      --left[static_cast<std::size_t>(i)];
      best = std::max(best, inst.rewards(i, queries[q]) + rec(q + 1));
      ++left[static_cast<std::size_t>(i)];
    }
    return best;
  };
  return rec(0);
}

/// Online optimum by a full decision tree over arrival sequences, reading
/// the horizon law and step probabilities straight from the model.
inline double full_tree_opt(const Instance& inst, const StochasticHorizonModel& model) {
  const int T = model.horizon();
  const int m = inst.num_types();
  std::vector<int> left = inst.capacities;
  // value(t) = expected reward from arrivals t+1.. given t arrivals so far.
  std::function<double(int)> rec = [&](int t) -> double {
    const double reach = model.total.survival(t + 1);
    if (t >= T || reach <= 0.0) return 0.0;
    const double here = model.total.survival(t) > 0.0 ? reach / model.total.survival(t) : 0.0;
    double v = 0.0;
    double none = 1.0;
    for (int j = 0; j < m; ++j) {
      const double p = model.probs(t, j);
      none -= p;
      if (p <= 0.0) continue;
      double best = rec(t + 1);
      for (int i = 0; i < inst.num_resources(); ++i) {
        if (left[static_cast<std::size_t>(i)] == 0) continue;
        --left[static_cast<std::size_t>(i)];
        best = std::max(best, inst.rewards(i, j) + rec(t + 1));
        ++left[static_cast<std::size_t>(i)];
      }
      v += p * best;
    }
    if (none > 1e-15) v += none * rec(t + 1);
    return here * v;
  };
  return rec(0);
}

/// Threshold-policy value on one order, averaging over every combination
/// of the per-type routing branches and replaying the policy rule.
inline double brute_force_threshold(const ThresholdPolicyPlan& plan, const std::vector<int>& order) {
  std::vector<RoutingDistribution<double>> laws;
  for (const auto& r : plan.rounding) laws.push_back(r.expand());
  const int m = static_cast<int>(laws.size());
  std::vector<std::size_t> pick(static_cast<std::size_t>(m), 0);
  double total = 0.0;
  std::function<void(int, double)> rec = [&](int j, double prob) {
    if (j == m) {
      std::vector<int> seen(static_cast<std::size_t>(m), 0);
      std::vector<bool> used(static_cast<std::size_t>(plan.num_units()), false);
      double reward = 0.0;
      for (const int type : order) {
        const auto& a = laws[static_cast<std::size_t>(type)].branches[pick[static_cast<std::size_t>(type)]].routing.assignment;
        const int rank = seen[static_cast<std::size_t>(type)]++;
        if (rank >= static_cast<int>(a.size())) continue;
        const int u = a[static_cast<std::size_t>(rank)];
        if (u < 0 || used[static_cast<std::size_t>(u)]) continue;
        const double r = plan.expanded.instance.rewards(u, type);
        if (r >= plan.thresholds[static_cast<std::size_t>(u)] - 1e-12) {
          used[static_cast<std::size_t>(u)] = true;
          reward += r;
        }
      }
      total += prob * reward;
      return;
    }
    const auto& branches = laws[static_cast<std::size_t>(j)].branches;
    for (std::size_t b = 0; b < branches.size(); ++b) {
      pick[static_cast<std::size_t>(j)] = b;
      rec(j + 1, prob * branches[b].probability);
    }
  };
  rec(0, 1.0);
  return total;
}

/// Every distinct order of the multiset d.
inline std::vector<std::vector<int>> all_orders(const RealizedDemand& d) {
  std::vector<int> seq;
  for (std::size_t j = 0; j < d.counts.size(); ++j) seq.insert(seq.end(), static_cast<std::size_t>(d.counts[j]), static_cast<int>(j));
  std::vector<std::vector<int>> out;
  do {
    out.push_back(seq);
  } while (std::next_permutation(seq.begin(), seq.end()));
  return out;
}

}  // namespace testing_support
