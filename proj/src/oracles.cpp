#include "stochmatch/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "stochmatch/lp.hpp"
#include "stochmatch/sampling.hpp"

namespace stochmatch {

namespace {

struct Welford {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double std_error() const {
    return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  }
};

// Visits every order in S(d) until `visit` returns false.
template <class F>
void for_each_order(const RealizedDemand& d, F&& visit) {
  ArrivalSequence seq = sorted_order(d);
  do {
    if (!visit(seq)) return;
  } while (std::next_permutation(seq.types.begin(), seq.types.end()));
}

}  // namespace

double offline_optimum(const Instance& inst, const RealizedDemand& d) {
  const int n = inst.num_resources();
  const int m = inst.num_types();
  if (static_cast<int>(d.counts.size()) != m) throw std::invalid_argument("demand vector has the wrong length");
  if (d.total() == 0) return 0.0;
  Lp lp(static_cast<Eigen::Index>(n) * m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) lp.objective(x_index(i, j, m)) = inst.rewards(i, j);
  }
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(lp.num_variables());
    for (int j = 0; j < m; ++j) row(x_index(i, j, m)) = 1.0;
    lp.add_row(row, inst.capacities[static_cast<std::size_t>(i)]);
  }
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(lp.num_variables());
    for (int i = 0; i < n; ++i) row(x_index(i, j, m)) = 1.0;
    lp.add_row(row, d.counts[static_cast<std::size_t>(j)]);
  }
  const auto sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) throw std::runtime_error("transportation LP failed");
  return sol.objective_value;
}

Estimate expected_offline(const Instance& inst, const OracleLimits& limits) {
  Estimate est;
  if (const auto support = enumerate_demand(inst.demand, inst.num_types(), limits.exact_cap)) {
    for (const auto& w : *support) est.value += w.probability * offline_optimum(inst, w.demand);
    est.samples = support->size();
    return est;
  }
  Welford acc;
  for (int trial = 0; trial < limits.trials; ++trial) {
    Rng rng(limits.seed, static_cast<std::uint64_t>(trial));
    acc.add(offline_optimum(inst, sample_demand(inst.demand, inst.num_types(), rng)));
  }
  est.value = acc.mean;
  est.std_error = acc.std_error();
  est.mode = EvalMode::MonteCarlo;
  est.samples = acc.n;
  return est;
}

std::size_t OnlineDp::state_index(const std::vector<int>& remaining) const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < radix.size(); ++i) s = s * static_cast<std::size_t>(radix[i]) + static_cast<std::size_t>(remaining[i]);
  return s;
}

int OnlineDp::best_action(int t, const std::vector<int>& remaining, int type) const {
  std::size_t states = 1;
  for (const int r : radix) states *= static_cast<std::size_t>(r);
  return decision.at((static_cast<std::size_t>(t) * states + state_index(remaining)) * static_cast<std::size_t>(num_types) +
                     static_cast<std::size_t>(type));
}

OnlineDp optimal_online_dp(const Instance& inst, std::size_t state_cap, int pad_steps) {
  if (is_indep(inst)) throw std::invalid_argument("the online optimum is defined for correl or horizon demand");
  const StochasticHorizonModel model = to_horizon(inst.demand);
  const int n = inst.num_resources();
  const int m = inst.num_types();
  OnlineDp dp;
  dp.horizon = model.horizon() + std::max(pad_steps, 0);
  dp.num_types = m;
  std::size_t states = 1;
  for (const int k : inst.capacities) {
    dp.radix.push_back(k + 1);
    states *= static_cast<std::size_t>(k + 1);
    if (states * static_cast<std::size_t>(std::max(dp.horizon, 1)) > state_cap) {
      throw std::invalid_argument("online DP state space exceeds " + std::to_string(state_cap));
    }
  }
  const auto survival = model.total.survival_vector(dp.horizon + 1);
  // stride[i]: index offset of one unit of resource i.
  std::vector<std::size_t> stride(static_cast<std::size_t>(n), 1);
  for (int i = n - 2; i >= 0; --i) stride[static_cast<std::size_t>(i)] = stride[static_cast<std::size_t>(i) + 1] * static_cast<std::size_t>(dp.radix[static_cast<std::size_t>(i) + 1]);
  const bool keep_table = static_cast<double>(states) * dp.horizon * m <= 2e7;
  if (keep_table) dp.decision.assign(states * static_cast<std::size_t>(dp.horizon) * static_cast<std::size_t>(m), -1);

  std::vector<double> next(states, 0.0);
  std::vector<double> cur(states, 0.0);
  std::vector<int> remaining(static_cast<std::size_t>(n));
  for (int t = dp.horizon - 1; t >= 0; --t) {
    const double here = survival[static_cast<std::size_t>(t)];
    const double q = here > 0.0 ? survival[static_cast<std::size_t>(t) + 1] / here : 0.0;
    const int row = std::min(t, model.horizon() - 1);
    double no_query = 1.0;
    for (int j = 0; j < m; ++j) no_query -= model.probs(row, j);
    no_query = std::max(no_query, 0.0);
    for (std::size_t s = 0; s < states; ++s) {
      std::size_t rest = s;
      for (int i = n - 1; i >= 0; --i) {
        remaining[static_cast<std::size_t>(i)] = static_cast<int>(rest % static_cast<std::size_t>(dp.radix[static_cast<std::size_t>(i)]));
        rest /= static_cast<std::size_t>(dp.radix[static_cast<std::size_t>(i)]);
      }
      const double stay = q * next[s];
      double v = no_query * stay;
      for (int j = 0; j < m; ++j) {
        const double p = model.probs(row, j);
        double best = stay;
        int action = -1;
        for (int i = 0; i < n; ++i) {
          if (remaining[static_cast<std::size_t>(i)] == 0) continue;
          const double take = inst.rewards(i, j) + q * next[s - stride[static_cast<std::size_t>(i)]];
          if (take > best) {
            best = take;
            action = i;
          }
        }
        v += p * best;
        if (keep_table) dp.decision[(static_cast<std::size_t>(t) * states + s) * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)] = action;
      }
      cur[s] = v;
    }
    std::swap(cur, next);
  }
  dp.value = survival.empty() ? 0.0 : survival[0] * next[states - 1];
  if (dp.horizon == 0) dp.value = 0.0;
  return dp;
}

double threshold_value_for_order(const ThresholdPolicyPlan& plan, const ArrivalSequence& order) {
  const int units = plan.num_units();
  const int m = static_cast<int>(plan.rank_prob.size());
  const auto& rewards = plan.expanded.instance.rewards;
  double total = 0.0;
  std::vector<double> cum(static_cast<std::size_t>(m));
  std::vector<int> seen(static_cast<std::size_t>(m));
  for (int i = 0; i < units; ++i) {
    std::fill(cum.begin(), cum.end(), 0.0);
    std::fill(seen.begin(), seen.end(), 0);
    for (const int j : order.types) {
      const int rank = seen[static_cast<std::size_t>(j)]++;
      if (!plan.eligible(i, j)) continue;
      const auto& rp = plan.rank_prob[static_cast<std::size_t>(j)];
      if (rank >= rp.cols()) continue;
      const double p = rp(i, rank);
      if (p == 0.0) continue;
      // No other type routed an earlier eligible arrival to this unit.
      double free = 1.0;
      for (int other = 0; other < m; ++other) {
        if (other != j) free *= 1.0 - cum[static_cast<std::size_t>(other)];
      }
      total += rewards(i, j) * p * free;
      cum[static_cast<std::size_t>(j)] += p;
    }
  }
  return total;
}

WorstOrder worst_case_order(const ThresholdPolicyPlan& plan, const RealizedDemand& d, std::size_t cap) {
  const std::size_t count = count_orders(d, cap);
  if (count > cap) throw std::invalid_argument("too many arrival orders for exhaustive search");
  WorstOrder worst;
  bool first = true;
  for_each_order(d, [&](const ArrivalSequence& seq) {
    const double v = threshold_value_for_order(plan, seq);
    if (first || v < worst.value) {
      worst.value = v;
      worst.order = seq;
      first = false;
    }
    ++worst.orders;
    return true;
  });
  return worst;
}

double random_order_value(const ThresholdPolicyPlan& plan, const RealizedDemand& d, std::size_t cap) {
  const std::size_t count = count_orders(d, cap);
  if (count > cap) throw std::invalid_argument("too many arrival orders for exhaustive averaging");
  double total = 0.0;
  std::size_t orders = 0;
  for_each_order(d, [&](const ArrivalSequence& seq) {
    total += threshold_value_for_order(plan, seq);
    ++orders;
    return true;
  });
  return total / static_cast<double>(orders);
}

Estimate exact_policy_value(const ThresholdPolicyPlan& plan, OrderRule rule, const OracleLimits& limits) {
  const Instance& inst = plan.expanded.instance;
  auto inner = [&](const RealizedDemand& d, Rng* rng) {
    if (rule == OrderRule::Worst) return worst_case_order(plan, d).value;
    if (rng != nullptr && count_orders(d, 100'000) > 100'000) {
      return threshold_value_for_order(plan, sample_random_order(d, *rng));
    }
    return random_order_value(plan, d);
  };
  Estimate est;
  if (const auto support = enumerate_demand(inst.demand, inst.num_types(), limits.exact_cap)) {
    std::size_t work = 0;
    for (const auto& w : *support) {
      work += count_orders(w.demand, limits.exact_cap);
      if (work > limits.exact_cap) break;
    }
    if (work <= limits.exact_cap) {
      for (const auto& w : *support) est.value += w.probability * inner(w.demand, nullptr);
      est.samples = support->size();
      return est;
    }
  }
  Welford acc;
  for (int trial = 0; trial < limits.trials; ++trial) {
    Rng rng(limits.seed, static_cast<std::uint64_t>(trial));
    const RealizedDemand d = sample_demand(inst.demand, inst.num_types(), rng);
    acc.add(inner(d, &rng));
  }
  est.value = acc.mean;
  est.std_error = acc.std_error();
  est.mode = EvalMode::MonteCarlo;
  est.samples = acc.n;
  return est;
}

double exact_policy_value(const HorizonPolicyPlan& plan) {
  const Instance& inst = plan.instance;
  const int n = inst.num_resources();
  const int m = inst.num_types();
  const int T = plan.horizon();
  const auto survival = plan.model.total.survival_vector(T);
  std::map<std::vector<int>, double> law{{inst.capacities, 1.0}};
  double value = 0.0;
  for (int t = 0; t < T; ++t) {
    std::map<std::vector<int>, double> next;
    const Eigen::MatrixXd& route = plan.route[static_cast<std::size_t>(t)];
    for (const auto& [state, w] : law) {
      double unmoved = 1.0;
      for (int j = 0; j < m; ++j) {
        const double p = plan.model.probs(t, j);
        if (p == 0.0) continue;
        for (int i = 0; i < n; ++i) {
          const double r = route(i, j);
          if (r == 0.0) continue;
          if (state[static_cast<std::size_t>(i)] == 0) continue;
          const double c = plan.ocrs[static_cast<std::size_t>(i)].accept[static_cast<std::size_t>(t)];
          const double mass = p * r * c;
          if (mass == 0.0) continue;
          value += survival[static_cast<std::size_t>(t)] * w * mass * inst.rewards(i, j);
          auto moved = state;
          --moved[static_cast<std::size_t>(i)];
          next[moved] += w * mass;
          unmoved -= mass;
        }
      }
      next[state] += w * unmoved;
    }
    law = std::move(next);
  }
  return value;
}

double static_threshold_value(const Instance& inst, double threshold) {
  if (inst.num_resources() != 1) throw std::invalid_argument("static threshold policies need n = 1");
  if (is_indep(inst)) throw std::invalid_argument("static threshold evaluation needs correl or horizon demand");
  const StochasticHorizonModel model = to_horizon(inst.demand);
  const int k = inst.capacities.front();
  const int T = model.horizon();
  const auto survival = model.total.survival_vector(T);
  std::vector<double> used(static_cast<std::size_t>(k) + 1, 0.0);
  used[0] = 1.0;
  double value = 0.0;
  for (int t = 0; t < T; ++t) {
    double accept = 0.0;
    double reward = 0.0;
    for (int j = 0; j < inst.num_types(); ++j) {
      if (inst.rewards(0, j) >= threshold) {
        accept += model.probs(t, j);
        reward += model.probs(t, j) * inst.rewards(0, j);
      }
    }
    const double open = 1.0 - used[static_cast<std::size_t>(k)];
    value += survival[static_cast<std::size_t>(t)] * open * reward;
    for (int c = k - 1; c >= 0; --c) {
      const double flow = used[static_cast<std::size_t>(c)] * accept;
      used[static_cast<std::size_t>(c)] -= flow;
      used[static_cast<std::size_t>(c) + 1] += flow;
    }
  }
  return value;
}

BestStatic best_static_threshold(const Instance& inst) {
  std::set<double> candidates(inst.rewards.data(), inst.rewards.data() + inst.rewards.size());
  candidates.insert(kInfiniteThreshold);
  BestStatic best{kInfiniteThreshold, 0.0};
  for (const double thr : candidates) {
    const double v = static_threshold_value(inst, thr);
    if (v > best.value) best = {thr, v};
  }
  return best;
}

void write_oracle_csv(std::ostream& out, const std::vector<OracleRow>& rows) {
  std::ostringstream s;
  s << "instance_id,oracle,value,mode,stderr\n" << std::fixed << std::setprecision(6);
  for (const auto& r : rows) {
    s << r.instance_id << ',' << r.oracle << ',' << r.estimate.value << ',' << to_string(r.estimate.mode) << ',';
    if (r.estimate.mode == EvalMode::MonteCarlo) s << r.estimate.std_error;
    s << '\n';
  }
  out << s.str();
}

}  // namespace stochmatch
