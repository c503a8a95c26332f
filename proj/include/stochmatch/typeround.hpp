#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochmatch/demand.hpp"
#include "stochmatch/numeric.hpp"
#include "stochmatch/rng.hpp"

namespace stochmatch {

inline constexpr int kIdle = -1;

/// Arrival rank -> resource (0-based) or kIdle.
struct Routing {
  std::vector<int> assignment;

  friend bool operator==(const Routing&, const Routing&) = default;
  friend auto operator<=>(const Routing&, const Routing&) = default;
};

/// "(3,2,-,1,-)" with 1-based resources.
inline std::string format_routing(const Routing& r) {
  std::string out = "(";
  for (std::size_t k = 0; k < r.assignment.size(); ++k) {
    if (k) out += ',';
    out += r.assignment[k] == kIdle ? std::string("-") : std::to_string(r.assignment[k] + 1);
  }
  return out + ")";
}

template <class Scalar>
struct WeightedRouting {
  Routing routing;
  Scalar probability;
};

template <class Scalar>
struct RoutingDistribution {
  std::vector<WeightedRouting<Scalar>> branches;

  Scalar probability_of(const Routing& r) const {
    Scalar total(0);
    for (const auto& b : branches) {
      if (b.routing == r) total += b.probability;
    }
    return total;
  }
};

/// Inclusive rank interval, 0-based.
struct Segment {
  int first = 0;
  int last = 0;
};

/// Explicit branch set after some number of stages.
template <class Scalar>
struct RoundingState {
  int stage = 0;
  std::vector<WeightedRouting<Scalar>> branches;
  std::vector<Segment> segments;
  /// Pr[D^t >= ell] for ell = 1..segments.size().
  std::vector<Scalar> residual_survival;
};

template <class Scalar>
struct RoundingStage {
  int resource = 0;
  int segment = 0;  // ell*, 0-based
  Scalar lambda = Scalar(0);
};

/// Thrown when a column cannot be rounded: fewer idle arrivals remain than
/// the next resource needs.
class InfeasibleColumn : public std::invalid_argument {
 public:
  InfeasibleColumn(int stage, int resource, double available, double required)
      : std::invalid_argument("column is infeasible at stage " + std::to_string(stage + 1) +
                              " (resource " + std::to_string(resource + 1) + "): Pr[D^t >= 1] = " +
                              std::to_string(available) + " < x = " + std::to_string(required)),
        stage_(stage) {}
  int stage() const { return stage_; }

 private:
  int stage_;
};

template <class Scalar>
class TypeRoundPlan;

/// Default feasibility slack: exact for rationals, 1e-12 for doubles.
template <class Scalar>
Scalar default_round_tolerance() {
  if constexpr (ScalarTraits<Scalar>::kExact) {
    return Scalar(0);
  } else {
    return Scalar(1e-12);
  }
}

/// Rounds one LP column. `x[i]` is the target marginal of resource i;
/// resources are processed in `order` (ascending index when empty).
/// Throws InfeasibleColumn when Pr[D^t >= 1] < x - tolerance at some stage.
template <class Scalar>
TypeRoundPlan<Scalar> typeround(const std::vector<Scalar>& x, const DemandDistribution<Scalar>& dist,
                                const std::vector<int>& order = {},
                                const Scalar& tolerance = default_round_tolerance<Scalar>());

/// Compact TypeRound output: one binary choice per stage. The rank space is
/// padded past max(n, L) with arrivals of probability zero, which keeps the
/// segment rule well defined when the last real segment is the only one
/// left with mass; routings are projected back to the real ranks on output.
template <class Scalar>
class TypeRoundPlan {
 public:
  int real_ranks() const { return real_ranks_; }
  int padded_ranks() const { return static_cast<int>(survival_.size()); }
  int num_resources() const { return static_cast<int>(targets_.size()); }
  const std::vector<RoundingStage<Scalar>>& stages() const { return stages_; }
  const std::vector<Scalar>& targets() const { return targets_; }
  /// Pr[D >= k] for ranks k = 1..padded_ranks().
  const std::vector<Scalar>& survival() const { return survival_; }

  /// One routing drawn with the plan's law, projected to the real ranks.
  Routing sample(Rng& rng) const {
    std::vector<int> idle(static_cast<std::size_t>(padded_ranks()));
    for (int k = 0; k < padded_ranks(); ++k) idle[static_cast<std::size_t>(k)] = k;
    std::vector<int> full(static_cast<std::size_t>(padded_ranks()), kIdle);
    for (const auto& st : stages_) {
      const bool take_first = rng.bernoulli(to_double(st.lambda));
      apply(idle, full, st, take_first);
    }
    full.resize(static_cast<std::size_t>(real_ranks_));
    return Routing{std::move(full)};
  }

  /// Full branch set after `t` stages over the padded rank space.
  RoundingState<Scalar> state_at(int t) const {
    if (t < 0 || t > static_cast<int>(stages_.size())) throw std::out_of_range("stage out of range");
    RoundingState<Scalar> out;
    out.stage = t;
    std::vector<int> idle(static_cast<std::size_t>(padded_ranks()));
    for (int k = 0; k < padded_ranks(); ++k) idle[static_cast<std::size_t>(k)] = k;
    std::vector<int> full(static_cast<std::size_t>(padded_ranks()), kIdle);
    enumerate(0, t, idle, full, Scalar(1), out.branches);
    out.segments = segments_after(t);
    const auto q = idle_probabilities(t);
    for (const auto& seg : out.segments) {
      Scalar s(0);
      for (int k = seg.first; k <= seg.last; ++k) {
        s += q[static_cast<std::size_t>(k)] * survival_[static_cast<std::size_t>(k)];
      }
      out.residual_survival.push_back(s);
    }
    return out;
  }

  /// Final distribution projected to the real ranks, identical routings
  /// merged, sorted by routing.
  RoutingDistribution<Scalar> expand() const {
    return project(state_at(static_cast<int>(stages_.size())).branches);
  }

  /// Drops padded ranks and merges identical routings.
  RoutingDistribution<Scalar> project(const std::vector<WeightedRouting<Scalar>>& branches) const {
    std::map<Routing, Scalar> merged;
    for (const auto& b : branches) {
      Routing r{std::vector<int>(b.routing.assignment.begin(),
                                 b.routing.assignment.begin() + real_ranks_)};
      merged[r] += b.probability;
    }
    RoutingDistribution<Scalar> out;
    for (auto& [r, p] : merged) out.branches.push_back({r, p});
    return out;
  }

  /// Segments of the stage-t partition that contain a real rank.
  int real_segments(int t) const {
    int count = 0;
    for (const auto& seg : segments_after(t)) count += seg.first < real_ranks_ ? 1 : 0;
    return count;
  }

  /// Pr[rank k idle] after t stages.
  std::vector<Scalar> idle_probabilities(int t) const {
    std::vector<Scalar> q(static_cast<std::size_t>(padded_ranks()), Scalar(1));
    auto segs = initial_segments();
    for (int s = 0; s < t; ++s) {
      const auto& st = stages_[static_cast<std::size_t>(s)];
      const Segment a = segs[static_cast<std::size_t>(st.segment)];
      const Segment b = segs[static_cast<std::size_t>(st.segment) + 1];
      for (int k = a.first; k <= a.last; ++k) q[static_cast<std::size_t>(k)] *= Scalar(1) - st.lambda;
      for (int k = b.first; k <= b.last; ++k) q[static_cast<std::size_t>(k)] *= st.lambda;
      merge(segs, st.segment);
    }
    return q;
  }

  /// out[i][k] = Pr[pi(k) = i] over the real ranks, without expanding the
  /// branch set: the stage routes the idle rank of one of two segments, and
  /// a rank is the idle one of its segment with probability q_k.
  std::vector<std::vector<Scalar>> rank_probabilities() const {
    std::vector<std::vector<Scalar>> out(static_cast<std::size_t>(num_resources()),
                                         std::vector<Scalar>(static_cast<std::size_t>(real_ranks_), Scalar(0)));
    std::vector<Scalar> q(static_cast<std::size_t>(padded_ranks()), Scalar(1));
    auto segs = initial_segments();
    for (const auto& st : stages_) {
      const Segment a = segs[static_cast<std::size_t>(st.segment)];
      const Segment b = segs[static_cast<std::size_t>(st.segment) + 1];
      auto& row = out[static_cast<std::size_t>(st.resource)];
      for (int k = a.first; k <= a.last && k < real_ranks_; ++k) row[static_cast<std::size_t>(k)] = st.lambda * q[static_cast<std::size_t>(k)];
      for (int k = b.first; k <= b.last && k < real_ranks_; ++k) {
        row[static_cast<std::size_t>(k)] = (Scalar(1) - st.lambda) * q[static_cast<std::size_t>(k)];
      }
      for (int k = a.first; k <= a.last; ++k) q[static_cast<std::size_t>(k)] *= Scalar(1) - st.lambda;
      for (int k = b.first; k <= b.last; ++k) q[static_cast<std::size_t>(k)] *= st.lambda;
      merge(segs, st.segment);
    }
    return out;
  }

  std::vector<Segment> segments_after(int t) const {
    auto segs = initial_segments();
    for (int s = 0; s < t; ++s) merge(segs, stages_[static_cast<std::size_t>(s)].segment);
    return segs;
  }

 private:
  friend TypeRoundPlan typeround<Scalar>(const std::vector<Scalar>&, const DemandDistribution<Scalar>&,
                                         const std::vector<int>&, const Scalar&);

  std::vector<Segment> initial_segments() const {
    std::vector<Segment> segs;
    for (int k = 0; k < padded_ranks(); ++k) segs.push_back({k, k});
    return segs;
  }

  static void merge(std::vector<Segment>& segs, int ell) {
    segs[static_cast<std::size_t>(ell)].last = segs[static_cast<std::size_t>(ell) + 1].last;
    segs.erase(segs.begin() + ell + 1);
  }

  // idle[ell] is the idle rank of segment ell in the current branch.
  static void apply(std::vector<int>& idle, std::vector<int>& full, const RoundingStage<Scalar>& st,
                    bool take_first) {
    const auto ell = static_cast<std::size_t>(st.segment);
    const int routed = take_first ? idle[ell] : idle[ell + 1];
    const int kept = take_first ? idle[ell + 1] : idle[ell];
    full[static_cast<std::size_t>(routed)] = st.resource;
    idle[ell] = kept;
    idle.erase(idle.begin() + static_cast<std::ptrdiff_t>(ell) + 1);
  }

  void enumerate(int s, int t, std::vector<int>& idle, std::vector<int>& full, const Scalar& p,
                 std::vector<WeightedRouting<Scalar>>& out) const {
    if (s == t) {
      out.push_back({Routing{full}, p});
      return;
    }
    const auto& st = stages_[static_cast<std::size_t>(s)];
    for (const bool take_first : {true, false}) {
      const Scalar w = take_first ? st.lambda : Scalar(Scalar(1) - st.lambda);
      if (w == Scalar(0)) continue;
      auto idle2 = idle;
      auto full2 = full;
      apply(idle2, full2, st, take_first);
      enumerate(s + 1, t, idle2, full2, Scalar(p * w), out);
    }
  }

  int real_ranks_ = 0;
  std::vector<Scalar> survival_;
  std::vector<Scalar> targets_;
  std::vector<RoundingStage<Scalar>> stages_;
};

template <class Scalar>
TypeRoundPlan<Scalar> typeround(const std::vector<Scalar>& x, const DemandDistribution<Scalar>& dist,
                                const std::vector<int>& order, const Scalar& tolerance) {
  const int n = static_cast<int>(x.size());
  std::vector<int> seq = order;
  if (seq.empty()) {
    for (int i = 0; i < n; ++i) seq.push_back(i);
  }
  {
    auto sorted = seq;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < static_cast<int>(sorted.size()); ++i) {
      if (static_cast<int>(sorted.size()) != n || sorted[static_cast<std::size_t>(i)] != i) {
        throw std::invalid_argument("processing order must be a permutation of the resources");
      }
    }
  }
  for (const auto& v : x) {
    if (v < Scalar(0)) throw std::invalid_argument("column entries must be nonnegative");
  }
  TypeRoundPlan<Scalar> plan;
  plan.real_ranks_ = std::max(n, dist.max_support());
  plan.survival_ = dist.survival_vector(plan.real_ranks_ + n);
  plan.targets_ = x;

  auto segs = plan.initial_segments();
  std::vector<Scalar> q(plan.survival_.size(), Scalar(1));
  for (int t = 0; t < n; ++t) {
    const int resource = seq[static_cast<std::size_t>(t)];
    const Scalar& target = x[static_cast<std::size_t>(resource)];
    std::vector<Scalar> s;
    for (const auto& seg : segs) {
      Scalar v(0);
      for (int k = seg.first; k <= seg.last; ++k) v += q[static_cast<std::size_t>(k)] * plan.survival_[static_cast<std::size_t>(k)];
      s.push_back(v);
    }
    if (s.front() < target - tolerance) {
      throw InfeasibleColumn(t, resource, to_double(s.front()), to_double(target));
    }
    // ell* ranges over all but the last segment.
    int ell = 0;
    for (int l = 0; l + 1 < static_cast<int>(segs.size()); ++l) {
      if (s[static_cast<std::size_t>(l)] >= target) ell = l;
    }
    const Scalar hi = s[static_cast<std::size_t>(ell)];
    const Scalar lo = s[static_cast<std::size_t>(ell) + 1];
    Scalar lambda = hi == lo ? Scalar(0) : Scalar((target - lo) / (hi - lo));
    if constexpr (!ScalarTraits<Scalar>::kExact) lambda = std::clamp(lambda, 0.0, 1.0);
    plan.stages_.push_back({resource, ell, lambda});
    const Segment a = segs[static_cast<std::size_t>(ell)];
    const Segment b = segs[static_cast<std::size_t>(ell) + 1];
    for (int k = a.first; k <= a.last; ++k) q[static_cast<std::size_t>(k)] *= Scalar(1) - lambda;
    for (int k = b.first; k <= b.last; ++k) q[static_cast<std::size_t>(k)] *= lambda;
    TypeRoundPlan<Scalar>::merge(segs, ell);
  }
  return plan;
}

template <class Scalar>
struct MarginalReport {
  std::vector<Scalar> achieved;
  Scalar max_error = Scalar(0);
};

/// Achieved marginals sum_branch p * sum_ell Pr[D >= ell] 1{pi(ell) = i}.
template <class Scalar>
MarginalReport<Scalar> verify_marginals(const RoutingDistribution<Scalar>& rd, const std::vector<Scalar>& x,
                                        const DemandDistribution<Scalar>& dist) {
  MarginalReport<Scalar> report;
  report.achieved.assign(x.size(), Scalar(0));
  for (const auto& b : rd.branches) {
    for (std::size_t k = 0; k < b.routing.assignment.size(); ++k) {
      const int i = b.routing.assignment[k];
      if (i == kIdle) continue;
      if (i < 0 || i >= static_cast<int>(x.size())) throw std::out_of_range("routing names an unknown resource");
      report.achieved[static_cast<std::size_t>(i)] += b.probability * dist.survival(static_cast<int>(k) + 1);
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Scalar err = abs_value(Scalar(report.achieved[i] - x[i]));
    if (err > report.max_error) report.max_error = err;
  }
  return report;
}

struct InvariantReport {
  bool ok = true;
  std::string failure;

  void fail(std::string what) {
    if (ok) failure = std::move(what);
    ok = false;
  }
};

/// Checks the stage-t state of a plan against the three TypeRound
/// invariants, plus the no-conflict rule on every routing, by brute force
/// over the explicit branch set.
template <class Scalar>
InvariantReport check_invariants(const TypeRoundPlan<Scalar>& plan, int t) {
  InvariantReport rep;
  const auto state = plan.state_at(t);
  const int L = plan.padded_ranks();
  const auto& surv = plan.survival();
  const Scalar tol = ScalarTraits<Scalar>::kExact ? Scalar(0) : Scalar(1e-12);
  const std::string at = " at stage " + std::to_string(t);

  Scalar total(0);
  for (const auto& b : state.branches) total += b.probability;
  if (abs_value(Scalar(total - Scalar(1))) > tol) rep.fail("branch probabilities do not sum to 1" + at);

  // Routing validity.
  for (const auto& b : state.branches) {
    std::vector<int> seen;
    for (const int i : b.routing.assignment) {
      if (i == kIdle) continue;
      if (std::find(seen.begin(), seen.end(), i) != seen.end()) rep.fail("resource routed twice" + at);
      seen.push_back(i);
    }
  }

  // Matching marginals.
  std::vector<bool> processed(static_cast<std::size_t>(plan.num_resources()), false);
  for (int s = 0; s < t; ++s) processed[static_cast<std::size_t>(plan.stages()[static_cast<std::size_t>(s)].resource)] = true;
  std::vector<Scalar> achieved(processed.size(), Scalar(0));
  for (const auto& b : state.branches) {
    for (int k = 0; k < L; ++k) {
      const int i = b.routing.assignment[static_cast<std::size_t>(k)];
      if (i != kIdle) achieved[static_cast<std::size_t>(i)] += b.probability * surv[static_cast<std::size_t>(k)];
    }
  }
  for (std::size_t i = 0; i < processed.size(); ++i) {
    const Scalar want = processed[i] ? plan.targets()[i] : Scalar(0);
    if (abs_value(Scalar(achieved[i] - want)) > tol) {
      rep.fail("resource " + std::to_string(i + 1) + " marginal " + std::to_string(to_double(achieved[i])) +
               " != " + std::to_string(to_double(want)) + at);
    }
  }

  if (static_cast<int>(state.segments.size()) != L - t) rep.fail("partition has the wrong number of segments" + at);
  for (std::size_t l = 0; l < state.segments.size(); ++l) {
    const int expect_first = l == 0 ? 0 : state.segments[l - 1].last + 1;
    if (state.segments[l].first != expect_first || state.segments[l].last < state.segments[l].first) {
      rep.fail("segments do not partition the ranks" + at);
    }
  }
  if (!state.segments.empty() && state.segments.back().last != L - 1) rep.fail("segments do not cover the ranks" + at);

  // Combined queries (a): one idle rank per segment per branch.
  std::vector<Scalar> idle_mass(state.segments.size(), Scalar(0));
  for (const auto& b : state.branches) {
    for (std::size_t l = 0; l < state.segments.size(); ++l) {
      int idle = 0;
      for (int k = state.segments[l].first; k <= state.segments[l].last; ++k) {
        idle += b.routing.assignment[static_cast<std::size_t>(k)] == kIdle ? 1 : 0;
      }
      if (idle != 1) rep.fail("segment " + std::to_string(l + 1) + " has " + std::to_string(idle) + " idle ranks" + at);
      idle_mass[l] += b.probability;
    }
  }
  for (const auto& m : idle_mass) {
    if (abs_value(Scalar(m - Scalar(1))) > tol) rep.fail("segment idle events are not exhaustive" + at);
  }

  // Combined queries (b): {D^t >= ell} is {idle rank of segment ell arrives},
  // checked per branch for every demand value, and in probability against the
  // residual survival recorded by the plan.
  std::vector<Scalar> direct(state.segments.size(), Scalar(0));
  for (const auto& b : state.branches) {
    std::vector<int> idle_rank(state.segments.size(), -1);
    for (std::size_t l = 0; l < state.segments.size(); ++l) {
      for (int k = state.segments[l].first; k <= state.segments[l].last; ++k) {
        if (b.routing.assignment[static_cast<std::size_t>(k)] == kIdle) idle_rank[l] = k;
      }
    }
    for (int d = 0; d <= L; ++d) {
      int arrived_idle = 0;
      for (int k = 0; k < d; ++k) arrived_idle += b.routing.assignment[static_cast<std::size_t>(k)] == kIdle ? 1 : 0;
      const Scalar at_least = d == 0 ? Scalar(1) : surv[static_cast<std::size_t>(d - 1)];
      const Scalar above = d < L ? surv[static_cast<std::size_t>(d)] : Scalar(0);
      const Scalar pmf = at_least - above;
      for (std::size_t l = 0; l < state.segments.size(); ++l) {
        const bool lhs = arrived_idle >= static_cast<int>(l) + 1;
        const bool rhs = idle_rank[l] >= 0 && idle_rank[l] < d;
        if (lhs != rhs) rep.fail("combined-query event mismatch for segment " + std::to_string(l + 1) + at);
        if (lhs) direct[l] += b.probability * pmf;
      }
    }
  }
  for (std::size_t l = 0; l < state.segments.size(); ++l) {
    if (abs_value(Scalar(direct[l] - state.residual_survival[l])) > tol) {
      rep.fail("residual survival of segment " + std::to_string(l + 1) + " is off" + at);
    }
  }

  // Separated routing.
  for (std::size_t i = 0; i < processed.size(); ++i) {
    if (!processed[i]) continue;
    int home = -1;
    bool separated = true;
    for (const auto& b : state.branches) {
      int where = -1;
      for (std::size_t l = 0; l < state.segments.size(); ++l) {
        for (int k = state.segments[l].first; k <= state.segments[l].last; ++k) {
          if (b.routing.assignment[static_cast<std::size_t>(k)] == static_cast<int>(i)) where = static_cast<int>(l);
        }
      }
      if (where < 0 || (home >= 0 && where != home)) separated = false;
      if (home < 0) home = where;
    }
    if (!separated) rep.fail("resource " + std::to_string(i + 1) + " is not confined to one segment" + at);
  }

  // The next target must still fit.
  if (t < static_cast<int>(plan.stages().size())) {
    const int next = plan.stages()[static_cast<std::size_t>(t)].resource;
    if (state.residual_survival.front() < plan.targets()[static_cast<std::size_t>(next)] - tol) {
      rep.fail("Pr[D^t >= 1] is below the next target" + at);
    }
  }
  return rep;
}

}  // namespace stochmatch
