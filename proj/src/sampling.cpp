#include "stochmatch/sampling.hpp"

#include <map>
#include <numeric>
#include <stdexcept>

namespace stochmatch {

namespace {

int sample_value(const Distribution& dist, Rng& rng) {
  return static_cast<int>(rng.categorical(dist.pmf_vector(), true));
}

std::vector<double> row_of(const Eigen::MatrixXd& m, int t) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(j)] = m(t, j);
  return out;
}

}  // namespace

std::vector<int> sample_horizon_steps(const StochasticHorizonModel& model, Rng& rng) {
  const int length = sample_value(model.total, rng);
  std::vector<int> steps;
  steps.reserve(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) {
    const auto row = row_of(model.probs, t);
    const std::size_t k = rng.categorical(row);
    steps.push_back(k == row.size() ? -1 : static_cast<int>(k));
  }
  return steps;
}

RealizedDemand sample_demand(const DemandModel& model, int num_types, Rng& rng) {
  RealizedDemand d;
  d.counts.assign(static_cast<std::size_t>(num_types), 0);
  if (const auto* indep = std::get_if<IndepDemandModel>(&model)) {
    for (int j = 0; j < num_types; ++j) {
      d.counts[static_cast<std::size_t>(j)] = sample_value(indep->per_type[static_cast<std::size_t>(j)], rng);
    }
  } else if (const auto* correl = std::get_if<CorrelDemandModel>(&model)) {
    const int total = sample_value(correl->total, rng);
    for (int t = 0; t < total; ++t) {
      ++d.counts[rng.categorical(correl->type_probs, true)];
    }
  } else {
    for (const int j : sample_horizon_steps(std::get<StochasticHorizonModel>(model), rng)) {
      if (j >= 0) ++d.counts[static_cast<std::size_t>(j)];
    }
  }
  return d;
}

ArrivalSequence sorted_order(const RealizedDemand& d) {
  ArrivalSequence seq;
  for (std::size_t j = 0; j < d.counts.size(); ++j) {
    seq.types.insert(seq.types.end(), static_cast<std::size_t>(d.counts[j]), static_cast<int>(j));
  }
  return seq;
}

ArrivalSequence sample_random_order(const RealizedDemand& d, Rng& rng) {
  ArrivalSequence seq = sorted_order(d);
  auto& v = seq.types;
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.uniform_int(i)]);
  }
  return seq;
}

std::optional<std::vector<WeightedDemand>> enumerate_demand(const DemandModel& model,
                                                            int num_types, std::size_t cap) {
  using Counts = std::vector<int>;
  std::map<Counts, double> support;
  if (const auto* indep = std::get_if<IndepDemandModel>(&model)) {
    support[Counts(static_cast<std::size_t>(num_types), 0)] = 1.0;
    for (int j = 0; j < num_types; ++j) {
      const auto& pmf = indep->per_type[static_cast<std::size_t>(j)].pmf_vector();
      std::map<Counts, double> next;
      for (const auto& [counts, p] : support) {
        for (std::size_t v = 0; v < pmf.size(); ++v) {
          if (pmf[v] == 0.0) continue;
          Counts c = counts;
          c[static_cast<std::size_t>(j)] = static_cast<int>(v);
          next[c] += p * pmf[v];
        }
      }
      support = std::move(next);
      if (support.size() > cap) return std::nullopt;
    }
  } else {
    // Step-by-step law of the count vector, stopped with Pr[D = t].
    const StochasticHorizonModel horizon = to_horizon(model);
    std::map<Counts, double> running{{Counts(static_cast<std::size_t>(num_types), 0), 1.0}};
    for (int t = 0;; ++t) {
      const double stop = horizon.total.pmf(t);
      if (stop > 0.0) {
        for (const auto& [counts, p] : running) support[counts] += stop * p;
      }
      if (t == horizon.horizon()) break;
      std::map<Counts, double> next;
      double no_query = 1.0;
      for (int j = 0; j < num_types; ++j) no_query -= horizon.probs(t, j);
      for (const auto& [counts, p] : running) {
        for (int j = 0; j < num_types; ++j) {
          const double q = horizon.probs(t, j);
          if (q == 0.0) continue;
          Counts c = counts;
          ++c[static_cast<std::size_t>(j)];
          next[c] += p * q;
        }
        if (no_query > 1e-15) next[counts] += p * no_query;
      }
      running = std::move(next);
      if (running.size() > cap) return std::nullopt;
    }
  }
  if (support.size() > cap) return std::nullopt;
  std::vector<WeightedDemand> out;
  out.reserve(support.size());
  for (auto& [counts, p] : support) out.push_back({RealizedDemand{counts}, p});
  return out;
}

}  // namespace stochmatch
