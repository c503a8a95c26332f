#include "stochmatch/policies.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace stochmatch {

namespace {

constexpr double kTieSlack = 1e-12;
constexpr double kRoundingSlack = 1e-9;

}  // namespace

bool ThresholdPolicyPlan::eligible(int unit, int type) const {
  return expanded.instance.rewards(unit, type) >= thresholds[static_cast<std::size_t>(unit)] - kTieSlack;
}

std::shared_ptr<const ThresholdPolicyPlan> plan_threshold_policy(const Instance& inst) {
  if (!is_indep(inst)) throw std::invalid_argument("the threshold policy needs indep demand");
  validate(inst);
  auto plan = std::make_shared<ThresholdPolicyPlan>();
  plan->original = inst;
  plan->expanded = expand_unit_capacity(inst);
  const Instance& unit = plan->expanded.instance;
  plan->lp = build_truncated_lp(unit);
  if (plan->lp.solution.status != LpStatus::Optimal) {
    throw std::runtime_error(std::string("truncated LP is ") + to_string(plan->lp.solution.status));
  }
  const int n = unit.num_resources();
  const int m = unit.num_types();
  plan->x.resize(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) plan->x(i, j) = std::max(0.0, plan->lp.solution.values(x_index(i, j, m)));
  }
  for (int j = 0; j < m; ++j) {
    std::vector<double> column(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = plan->x(i, j);
    plan->rounding.push_back(typeround(column, marginal(unit.demand, j), {}, kRoundingSlack));
    const auto probs = plan->rounding.back().rank_probabilities();
    Eigen::MatrixXd rp(n, plan->rounding.back().real_ranks());
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < rp.cols(); ++k) rp(i, k) = probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    plan->rank_prob.push_back(std::move(rp));
  }
  for (int i = 0; i < n; ++i) plan->thresholds.push_back(unit.rewards.row(i).dot(plan->x.row(i)) / 2.0);
  return plan;
}

ThresholdPolicyState start_threshold_policy(std::shared_ptr<const ThresholdPolicyPlan> plan, Rng& rng) {
  ThresholdPolicyState state;
  for (const auto& r : plan->rounding) state.routing.push_back(r.sample(rng));
  state.seen.assign(plan->rounding.size(), 0);
  state.available.assign(static_cast<std::size_t>(plan->num_units()), true);
  state.plan = std::move(plan);
  return state;
}

ThresholdPolicyState build_indep_adv_policy(const Instance& inst, std::uint64_t seed) {
  Rng rng(seed);
  return start_threshold_policy(plan_threshold_policy(inst), rng);
}

Decision threshold_policy_step(ThresholdPolicyState& state, int type) {
  const auto& plan = *state.plan;
  const int rank = state.seen.at(static_cast<std::size_t>(type))++;
  const auto& assignment = state.routing[static_cast<std::size_t>(type)].assignment;
  Decision d;
  if (rank >= static_cast<int>(assignment.size())) return d;
  const int unit = assignment[static_cast<std::size_t>(rank)];
  if (unit == kIdle) return d;
  d.resource = plan.expanded.parent[static_cast<std::size_t>(unit)];
  // Different types route independently, so the unit may already be taken.
  if (plan.eligible(unit, type) && state.available[static_cast<std::size_t>(unit)]) {
    state.available[static_cast<std::size_t>(unit)] = false;
    d.accepted = true;
    d.reward = plan.expanded.instance.rewards(unit, type);
  }
  return d;
}

std::shared_ptr<const HorizonPolicyPlan> build_horizon_policy(const Instance& inst) {
  if (is_indep(inst)) throw std::invalid_argument("the horizon policy needs correl or horizon demand");
  validate(inst);
  auto plan = std::make_shared<HorizonPolicyPlan>();
  plan->instance = inst;
  plan->model = to_horizon(inst.demand);
  plan->lp = solve_conditional_lp(inst);
  if (plan->lp.status != LpStatus::Optimal) {
    throw std::runtime_error(std::string("conditional LP is ") + to_string(plan->lp.status));
  }
  const int n = inst.num_resources();
  const int m = inst.num_types();
  const int T = plan->horizon();
  std::vector<std::vector<double>> rates(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(T), 0.0));
  for (int t = 0; t < T; ++t) {
    Eigen::MatrixXd route = Eigen::MatrixXd::Zero(n, m);
    for (int j = 0; j < m; ++j) {
      const double p = plan->model.probs(t, j);
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        const double y = std::max(0.0, plan->lp.values(y_index(t, i, j, n, m)));
        rates[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] += y;
        if (p > 0.0) route(i, j) = y / p;
        total += route(i, j);
      }
      // Solver round-off can push the row a hair past one.
      if (total > 1.0) route.col(j) /= total;
    }
    plan->route.push_back(std::move(route));
  }
  for (int i = 0; i < n; ++i) {
    auto& r = rates[static_cast<std::size_t>(i)];
    const double total = std::accumulate(r.begin(), r.end(), 0.0);
    const double cap = inst.capacities[static_cast<std::size_t>(i)];
    if (total > cap) {
      for (auto& y : r) y *= cap / total;
    }
    plan->ocrs.push_back(ocrs_plan(r, inst.capacities[static_cast<std::size_t>(i)]));
  }
  return plan;
}

HorizonPolicyState start_horizon_policy(std::shared_ptr<const HorizonPolicyPlan> plan) {
  HorizonPolicyState state;
  state.remaining = plan->instance.capacities;
  state.plan = std::move(plan);
  return state;
}

Decision horizon_policy_step(HorizonPolicyState& state, int t, int type, Rng& rng) {
  Decision d;
  if (type == kNoQuery) return d;
  const auto& plan = *state.plan;
  if (t < 0 || t >= plan.horizon()) throw std::out_of_range("step beyond the horizon");
  if (!(plan.model.probs(t, type) > 0.0)) throw std::logic_error("arrival of a type with zero probability");
  const Eigen::MatrixXd& route = plan.route[static_cast<std::size_t>(t)];
  std::vector<double> weights(static_cast<std::size_t>(route.rows()));
  for (Eigen::Index i = 0; i < route.rows(); ++i) weights[static_cast<std::size_t>(i)] = route(i, type);
  const std::size_t pick = rng.categorical(weights);
  if (pick == weights.size()) return d;
  const int i = static_cast<int>(pick);
  d.resource = i;
  const double accept = plan.ocrs[pick].accept[static_cast<std::size_t>(t)];
  if (state.remaining[pick] > 0 && rng.bernoulli(accept)) {
    --state.remaining[pick];
    d.accepted = true;
    d.reward = plan.instance.rewards(i, type);
  }
  return d;
}

Decision StaticThresholdPolicy::step(int, int type, Rng&) {
  Decision d;
  if (type == kNoQuery) return d;
  d.resource = 0;
  if (used_ < capacity_ && rewards_(type) >= threshold_) {
    ++used_;
    d.accepted = true;
    d.reward = rewards_(type);
  }
  return d;
}

std::unique_ptr<StaticThresholdPolicy> static_threshold_policy(const Instance& inst, double threshold) {
  if (inst.num_resources() != 1) throw std::invalid_argument("static threshold policies need n = 1");
  return std::make_unique<StaticThresholdPolicy>(inst.rewards.row(0).transpose(), threshold,
                                                 inst.capacities.front());
}

double PolicyTrace::total_reward() const {
  double total = 0.0;
  for (const auto& r : rows) total += r.decision.reward;
  return total;
}

PolicyTrace run_policy(OnlinePolicy& policy, const std::vector<int>& arrivals, Rng& rng) {
  PolicyTrace trace;
  trace.policy = policy.name();
  policy.begin(rng);
  for (std::size_t t = 0; t < arrivals.size(); ++t) {
    trace.rows.push_back({static_cast<int>(t), arrivals[t], policy.step(static_cast<int>(t), arrivals[t], rng)});
  }
  return trace;
}

void write_trace_csv(std::ostream& out, const PolicyTrace& trace) {
  std::ostringstream s;
  s << "step,type,resource,accepted,reward\n" << std::fixed << std::setprecision(6);
  for (const auto& r : trace.rows) {
    s << r.step + 1 << ',';
    if (r.type == kNoQuery) {
      s << "none";
    } else {
      s << r.type + 1;
    }
    s << ',';
    if (r.decision.resource == kRejected) {
      s << "none";
    } else {
      s << r.decision.resource + 1;
    }
    s << ',' << (r.decision.accepted ? 1 : 0) << ',' << r.decision.reward << '\n';
  }
  out << s.str();
}

}  // namespace stochmatch
