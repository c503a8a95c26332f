#include "stochmatch/instance.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stochmatch {

namespace {

constexpr double kProbTolerance = 1e-12;

struct ModelValidator {
  int num_types;

  void operator()(const IndepDemandModel& model) const {
    if (static_cast<int>(model.per_type.size()) != num_types) {
      throw std::invalid_argument("indep demand lists " + std::to_string(model.per_type.size()) +
                                  " distributions for " + std::to_string(num_types) + " types");
    }
  }

  void operator()(const CorrelDemandModel& model) const {
    if (static_cast<int>(model.type_probs.size()) != num_types) {
      throw std::invalid_argument("correl demand lists " +
                                  std::to_string(model.type_probs.size()) +
                                  " type probabilities for " + std::to_string(num_types) +
                                  " types");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < model.type_probs.size(); ++j) {
      if (!(model.type_probs[j] >= 0.0)) {
        throw std::invalid_argument("type probability " + std::to_string(j + 1) +
                                    " is negative");
      }
      total += model.type_probs[j];
    }
    if (std::abs(total - 1.0) > kProbTolerance) {
      throw std::invalid_argument("correl type probabilities sum to " + std::to_string(total));
    }
  }

  void operator()(const StochasticHorizonModel& model) const {
    const int horizon = model.horizon();
    if (model.probs.rows() != horizon || model.probs.cols() != num_types) {
      throw std::invalid_argument("horizon probabilities must be " + std::to_string(horizon) +
                                  " x " + std::to_string(num_types) + " (T x m), got " +
                                  std::to_string(model.probs.rows()) + " x " +
                                  std::to_string(model.probs.cols()));
    }
    for (int t = 0; t < horizon; ++t) {
      if ((model.probs.row(t).array() < 0.0).any()) {
        throw std::invalid_argument("horizon row " + std::to_string(t + 1) +
                                    " has a negative probability");
      }
      if (model.probs.row(t).sum() > 1.0 + kProbTolerance) {
        throw std::invalid_argument("horizon row " + std::to_string(t + 1) + " sums to " +
                                    std::to_string(model.probs.row(t).sum()) + " > 1");
      }
    }
  }
};

}  // namespace

int Instance::total_capacity() const {
  return std::accumulate(capacities.begin(), capacities.end(), 0);
}

int RealizedDemand::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

void validate(const DemandModel& model, int num_types) {
  std::visit(ModelValidator{num_types}, model);
}

void validate(const Instance& inst) {
  if (static_cast<int>(inst.capacities.size()) != inst.num_resources()) {
    throw std::invalid_argument("capacities list " + std::to_string(inst.capacities.size()) +
                                " entries for " + std::to_string(inst.num_resources()) +
                                " resources");
  }
  for (std::size_t i = 0; i < inst.capacities.size(); ++i) {
    if (inst.capacities[i] < 1) {
      throw std::invalid_argument("capacity of resource " + std::to_string(i + 1) +
                                  " must be at least 1");
    }
  }
  if (!inst.rewards.allFinite() || (inst.rewards.array() < 0.0).any()) {
    throw std::invalid_argument("rewards must be finite and nonnegative");
  }
  validate(inst.demand, inst.num_types());
}

bool is_indep(const Instance& inst) {
  return std::holds_alternative<IndepDemandModel>(inst.demand);
}
bool is_correl(const Instance& inst) {
  return std::holds_alternative<CorrelDemandModel>(inst.demand);
}
bool is_horizon(const Instance& inst) {
  return std::holds_alternative<StochasticHorizonModel>(inst.demand);
}

ExpandedInstance expand_unit_capacity(const Instance& inst) {
  ExpandedInstance out;
  const int copies = inst.total_capacity();
  out.instance.rewards.resize(copies, inst.num_types());
  out.instance.capacities.assign(static_cast<std::size_t>(copies), 1);
  out.instance.demand = inst.demand;
  out.instance.arrival = inst.arrival;
  out.parent.reserve(static_cast<std::size_t>(copies));
  int row = 0;
  for (int i = 0; i < inst.num_resources(); ++i) {
    for (int c = 0; c < inst.capacities[static_cast<std::size_t>(i)]; ++c) {
      out.instance.rewards.row(row++) = inst.rewards.row(i);
      out.parent.push_back(i);
    }
  }
  return out;
}

Distribution marginal(const DemandModel& model, int type) {
  if (const auto* indep = std::get_if<IndepDemandModel>(&model)) {
    return indep->per_type.at(static_cast<std::size_t>(type));
  }
  const StochasticHorizonModel horizon = to_horizon(model);
  // Law of the count after t steps, mixed over Pr[D = t].
  const int T = horizon.horizon();
  std::vector<double> law{1.0};
  std::vector<double> out(static_cast<std::size_t>(T) + 1, 0.0);
  for (int t = 0; t <= T; ++t) {
    const double stop = horizon.total.pmf(t);
    for (std::size_t c = 0; c < law.size(); ++c) out[c] += stop * law[c];
    if (t == T) break;
    const double p = horizon.probs(t, type);
    std::vector<double> next(law.size() + 1, 0.0);
    for (std::size_t c = 0; c < law.size(); ++c) {
      next[c] += law[c] * (1.0 - p);
      next[c + 1] += law[c] * p;
    }
    law = std::move(next);
  }
  // Round-off can leave a total a hair off one; renormalize.
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (auto& p : out) p /= total;
  return Distribution(std::move(out));
}

double mean_demand(const DemandModel& model, int type) {
  if (const auto* correl = std::get_if<CorrelDemandModel>(&model)) {
    return correl->total.mean() * correl->type_probs.at(static_cast<std::size_t>(type));
  }
  return marginal(model, type).mean();
}

StochasticHorizonModel to_horizon(const DemandModel& model) {
  if (const auto* horizon = std::get_if<StochasticHorizonModel>(&model)) return *horizon;
  if (const auto* correl = std::get_if<CorrelDemandModel>(&model)) {
    StochasticHorizonModel out;
    out.total = correl->total;
    const int T = correl->total.max_support();
    const int m = static_cast<int>(correl->type_probs.size());
    out.probs.resize(T, m);
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < m; ++j) out.probs(t, j) = correl->type_probs[static_cast<std::size_t>(j)];
    }
    return out;
  }
  throw std::invalid_argument("indep demand has no stochastic-horizon representation");
}

std::size_t count_orders(const RealizedDemand& d, std::size_t cap) {
  // Multinomial coefficient built as a product of binomials, saturating.
  long double value = 1.0L;
  int placed = 0;
  for (const int c : d.counts) {
    for (int k = 1; k <= c; ++k) {
      value = value * static_cast<long double>(placed + k) / static_cast<long double>(k);
      if (value > static_cast<long double>(cap) + 0.5L) return cap + 1;
    }
    placed += c;
  }
  return static_cast<std::size_t>(std::llround(static_cast<double>(value)));
}

}  // namespace stochmatch
