#pragma once

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "stochmatch/demand.hpp"

namespace stochmatch {

/// Independent per-type demands D_j.
struct IndepDemandModel {
  std::vector<Distribution> per_type;
};

/// Total demand D, then i.i.d. types with probabilities p_j.
struct CorrelDemandModel {
  Distribution total;
  std::vector<double> type_probs;
};

/// Total demand D with time-varying type probabilities: row t of `probs`
/// is the type law of step t + 1 given D >= t + 1. A row summing to less
/// than one leaves the remainder as a "no query" outcome.
struct StochasticHorizonModel {
  Distribution total;
  Eigen::MatrixXd probs;  // T x m

  int horizon() const { return total.max_support(); }
};

using DemandModel = std::variant<IndepDemandModel, CorrelDemandModel, StochasticHorizonModel>;

enum class ArrivalPattern { Adversarial, RandomOrder };

struct Instance {
  Eigen::MatrixXd rewards;  // n x m
  std::vector<int> capacities;
  DemandModel demand;
  ArrivalPattern arrival = ArrivalPattern::Adversarial;

  int num_resources() const { return static_cast<int>(rewards.rows()); }
  int num_types() const { return static_cast<int>(rewards.cols()); }
  int total_capacity() const;
};

/// Realized per-type counts d_j.
struct RealizedDemand {
  std::vector<int> counts;

  int total() const;
};

/// Arrival order: a sequence of type indices.
struct ArrivalSequence {
  std::vector<int> types;
};

/// Throws std::invalid_argument describing the first violated invariant.
void validate(const Instance& inst);
void validate(const DemandModel& model, int num_types);

bool is_indep(const Instance& inst);
bool is_correl(const Instance& inst);
bool is_horizon(const Instance& inst);

/// Instance with every resource split into unit-capacity copies, plus the
/// copy -> parent map.
struct ExpandedInstance {
  Instance instance;
  std::vector<int> parent;
};

ExpandedInstance expand_unit_capacity(const Instance& inst);

/// Marginal law of D_j under any of the three demand models.
Distribution marginal(const DemandModel& model, int type);

/// E[D_j].
double mean_demand(const DemandModel& model, int type);

/// The Correl model as a stochastic horizon with identical rows; horizon
/// models pass through. Throws for Indep.
StochasticHorizonModel to_horizon(const DemandModel& model);

/// Number of orderings of a multiset with these counts, saturating at
/// `cap + 1`.
std::size_t count_orders(const RealizedDemand& d, std::size_t cap);

}  // namespace stochmatch
