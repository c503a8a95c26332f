#pragma once

#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "stochmatch/instance.hpp"
#include "stochmatch/lp.hpp"
#include "stochmatch/ocrs.hpp"
#include "stochmatch/rng.hpp"
#include "stochmatch/typeround.hpp"

namespace stochmatch {

inline constexpr int kNoQuery = -1;
inline constexpr int kRejected = -1;

struct Decision {
  int resource = kRejected;  // original (unexpanded) resource index
  bool accepted = false;
  double reward = 0.0;
};

/// Uniform step interface used by the simulator.
class OnlinePolicy {
 public:
  virtual ~OnlinePolicy() = default;
  virtual std::string name() const = 0;
  /// Resets per-path state and draws any per-path randomness.
  virtual void begin(Rng& rng) = 0;
  /// Step t (0-based) with an arrival of `type`, or kNoQuery.
  virtual Decision step(int t, int type, Rng& rng) = 0;
};

// ---------------------------------------------------------------------------
// Threshold policy for independent demands and adversarial order.

/// Everything the threshold policy fixes before any arrival.
struct ThresholdPolicyPlan {
  Instance original;
  ExpandedInstance expanded;
  TruncatedLp lp;
  /// x*[i,j] over expanded resources, clamped to be nonnegative.
  Eigen::MatrixXd x;
  /// TypeRound output per type.
  std::vector<TypeRoundPlan<double>> rounding;
  /// tau*_i = (sum_j r_ij x*_ij) / 2 per expanded resource.
  std::vector<double> thresholds;
  /// Routing probabilities by type: rank_prob[j](i, ell) = Pr[pi_j(ell) = i].
  std::vector<Eigen::MatrixXd> rank_prob;

  int num_units() const { return static_cast<int>(thresholds.size()); }
  /// Rewards r_ij >= tau_i pass; ties pass with 1e-12 slack.
  bool eligible(int unit, int type) const;
};

/// Solves the truncated LP on the unit-capacity expansion and rounds each
/// column. Throws std::invalid_argument unless the demand is Indep.
std::shared_ptr<const ThresholdPolicyPlan> plan_threshold_policy(const Instance& inst);

struct ThresholdPolicyState {
  std::shared_ptr<const ThresholdPolicyPlan> plan;
  std::vector<Routing> routing;  // per type
  std::vector<int> seen;         // arrivals per type so far
  std::vector<bool> available;   // per expanded unit
};

/// Plan plus one independently sampled routing per type.
ThresholdPolicyState build_indep_adv_policy(const Instance& inst, std::uint64_t seed);
ThresholdPolicyState start_threshold_policy(std::shared_ptr<const ThresholdPolicyPlan> plan, Rng& rng);

/// The next arrival of type j goes to pi_j(ell); it is matched iff the
/// reward clears the threshold and the unit is still free.
Decision threshold_policy_step(ThresholdPolicyState& state, int type);

class ThresholdPolicy final : public OnlinePolicy {
 public:
  explicit ThresholdPolicy(std::shared_ptr<const ThresholdPolicyPlan> plan) : plan_(std::move(plan)) {}
  std::string name() const override { return "threshold"; }
  void begin(Rng& rng) override { state_ = start_threshold_policy(plan_, rng); }
  Decision step(int, int type, Rng&) override {
    return type == kNoQuery ? Decision{} : threshold_policy_step(state_, type);
  }
  const ThresholdPolicyPlan& plan() const { return *plan_; }

 private:
  std::shared_ptr<const ThresholdPolicyPlan> plan_;
  ThresholdPolicyState state_;
};

// ---------------------------------------------------------------------------
// OCRS policy for stochastic horizons.

struct HorizonPolicyPlan {
  Instance instance;
  StochasticHorizonModel model;
  LpResult lp;
  /// route[t](i, j) = y^t_ij / p_tj (0 where p_tj = 0).
  std::vector<Eigen::MatrixXd> route;
  std::vector<OcrsPlan> ocrs;  // per resource

  int horizon() const { return model.horizon(); }
};

/// Solves the conditional LP and builds one OCRS per resource over the
/// step rates y^t_i = sum_j y^t_ij. Throws for Indep demand.
std::shared_ptr<const HorizonPolicyPlan> build_horizon_policy(const Instance& inst);

struct HorizonPolicyState {
  std::shared_ptr<const HorizonPolicyPlan> plan;
  std::vector<int> remaining;
};

HorizonPolicyState start_horizon_policy(std::shared_ptr<const HorizonPolicyPlan> plan);

/// Routes the arrival to i with probability y^t_ij / p_tj; resource i's OCRS
/// then accepts with its step-t probability if capacity remains.
Decision horizon_policy_step(HorizonPolicyState& state, int t, int type, Rng& rng);

class HorizonPolicy final : public OnlinePolicy {
 public:
  explicit HorizonPolicy(std::shared_ptr<const HorizonPolicyPlan> plan) : plan_(std::move(plan)) {}
  std::string name() const override { return "horizon"; }
  void begin(Rng&) override { state_ = start_horizon_policy(plan_); }
  Decision step(int t, int type, Rng& rng) override {
    return horizon_policy_step(state_, t, type, rng);
  }
  const HorizonPolicyPlan& plan() const { return *plan_; }

 private:
  std::shared_ptr<const HorizonPolicyPlan> plan_;
  HorizonPolicyState state_;
};

// ---------------------------------------------------------------------------
// Static threshold policy (single resource).

class StaticThresholdPolicy final : public OnlinePolicy {
 public:
  StaticThresholdPolicy(Eigen::VectorXd rewards, double threshold, int capacity)
      : rewards_(std::move(rewards)), threshold_(threshold), capacity_(capacity) {}
  std::string name() const override { return "static"; }
  void begin(Rng&) override { used_ = 0; }
  Decision step(int, int type, Rng&) override;
  double threshold() const { return threshold_; }

 private:
  Eigen::VectorXd rewards_;
  double threshold_;
  int capacity_;
  int used_ = 0;
};

/// Accepts iff reward >= threshold and capacity remains. Requires n = 1.
std::unique_ptr<StaticThresholdPolicy> static_threshold_policy(const Instance& inst, double threshold);

inline constexpr double kInfiniteThreshold = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------

struct TraceRow {
  int step = 0;
  int type = kNoQuery;
  Decision decision;
};

/// One sample path.
struct PolicyTrace {
  std::string policy;
  std::uint64_t seed = 0;
  std::vector<TraceRow> rows;

  double total_reward() const;
};

/// Runs `policy` over an arrival sequence (kNoQuery entries allowed).
PolicyTrace run_policy(OnlinePolicy& policy, const std::vector<int>& arrivals, Rng& rng);

/// "step,type,resource,accepted,reward" with 1-based step/type/resource.
void write_trace_csv(std::ostream& out, const PolicyTrace& trace);

}  // namespace stochmatch
