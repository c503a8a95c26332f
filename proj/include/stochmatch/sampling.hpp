#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "stochmatch/instance.hpp"
#include "stochmatch/rng.hpp"

namespace stochmatch {

/// Draw of a demand vector. For horizon models this discards the step
/// order; use sample_horizon_steps when the order matters.
RealizedDemand sample_demand(const DemandModel& model, int num_types, Rng& rng);

/// Per-step outcomes of a horizon (or Correl) model: entry t is the type of
/// step t + 1, or -1 for a "no query" step. Length is the realized D.
std::vector<int> sample_horizon_steps(const StochasticHorizonModel& model, Rng& rng);

/// Uniform draw from S(d) by a Fisher-Yates shuffle of the multiset.
ArrivalSequence sample_random_order(const RealizedDemand& d, Rng& rng);

/// Realization order with all copies of each type contiguous, types
/// ascending.
ArrivalSequence sorted_order(const RealizedDemand& d);

struct WeightedDemand {
  RealizedDemand demand;
  double probability;
};

/// Exact support of the demand vector with probabilities, or nullopt if it
/// has more than `cap` points.
std::optional<std::vector<WeightedDemand>> enumerate_demand(const DemandModel& model,
                                                            int num_types, std::size_t cap);

}  // namespace stochmatch
