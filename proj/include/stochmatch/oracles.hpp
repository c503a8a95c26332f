#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stochmatch/instance.hpp"
#include "stochmatch/policies.hpp"

namespace stochmatch {

enum class EvalMode { Exact, MonteCarlo };

inline const char* to_string(EvalMode m) { return m == EvalMode::Exact ? "exact" : "monte-carlo"; }

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  EvalMode mode = EvalMode::Exact;
  std::size_t samples = 0;  // support points or trials
};

struct OracleLimits {
  /// Exact enumeration budget (support points, or realizations times orders).
  std::size_t exact_cap = 1'000'000;
  /// Monte-Carlo fallback.
  int trials = 100'000;
  std::uint64_t seed = 0;
};

/// Max-weight b-matching of realized demand, via the transportation LP.
double offline_optimum(const Instance& inst, const RealizedDemand& d);

/// E_D[offline_optimum]; exact when the demand support fits the budget.
Estimate expected_offline(const Instance& inst, const OracleLimits& limits = {});

/// Online optimum for a stochastic horizon (Correl is converted). The state
/// is (step, remaining capacities); the arrival count is the only clock.
struct OnlineDp {
  double value = 0.0;
  std::vector<int> radix;  // k_i + 1
  int horizon = 0;
  int num_types = 0;
  /// decision[(t * states + s) * m + j]: resource to match or -1.
  std::vector<int> decision;

  std::size_t state_index(const std::vector<int>& remaining) const;
  int best_action(int t, const std::vector<int>& remaining, int type) const;
};

/// Rejects state spaces with more than `state_cap` (t, capacity) pairs.
/// `pad_steps` appends steps that occur with probability zero.
OnlineDp optimal_online_dp(const Instance& inst, std::size_t state_cap = 10'000'000, int pad_steps = 0);

enum class OrderRule { Worst, Random };

/// Threshold policy value on a realization and a fixed order, in closed
/// form over the independent per-type routings.
double threshold_value_for_order(const ThresholdPolicyPlan& plan, const ArrivalSequence& order);

struct WorstOrder {
  ArrivalSequence order;
  double value = 0.0;
  std::size_t orders = 0;
};

/// Minimizing order over S(d). Throws if |S(d)| exceeds `cap`.
WorstOrder worst_case_order(const ThresholdPolicyPlan& plan, const RealizedDemand& d,
                            std::size_t cap = 100'000);

/// Average over S(d). Throws if |S(d)| exceeds `cap`.
double random_order_value(const ThresholdPolicyPlan& plan, const RealizedDemand& d,
                          std::size_t cap = 100'000);

/// E_D of the worst-order (or uniform-order) value of the threshold policy.
Estimate exact_policy_value(const ThresholdPolicyPlan& plan, OrderRule rule,
                            const OracleLimits& limits = {});

/// Expected reward of the horizon policy by a joint forward DP over the
/// remaining-capacity vectors.
double exact_policy_value(const HorizonPolicyPlan& plan);

/// Expected reward of a static threshold on a single-resource horizon.
double static_threshold_value(const Instance& inst, double threshold);

struct BestStatic {
  double threshold = 0.0;
  double value = 0.0;
};

/// Best static threshold over every distinct reward and infinity.
BestStatic best_static_threshold(const Instance& inst);

struct OracleRow {
  std::string instance_id;
  std::string oracle;
  Estimate estimate;
};

/// Columns: instance_id, oracle, value, mode, stderr (empty in exact mode).
void write_oracle_csv(std::ostream& out, const std::vector<OracleRow>& rows);

}  // namespace stochmatch
