#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stochmatch/instance.hpp"
#include "stochmatch/simplex.hpp"

namespace stochmatch {

using Lp = LinearProgram<double>;
using LpResult = LpSolution<double>;

/// Column index of x[i,j] in the fluid and truncated LPs.
inline Eigen::Index x_index(int i, int j, int m) { return static_cast<Eigen::Index>(i) * m + j; }

/// Column index of y[t,i,j] in the conditional LP (t is 0-based).
inline Eigen::Index y_index(int t, int i, int j, int n, int m) {
  return (static_cast<Eigen::Index>(t) * n + i) * m + j;
}

/// Capacity rows sum_j x_ij <= k_i and demand rows sum_i x_ij <= E[D_j].
/// Throws for stochastic-horizon demand.
Lp build_fluid_lp(const Instance& inst);

struct Cut {
  int type = 0;
  std::vector<int> subset;  // ascending resource indices
  double rhs = 0.0;
};

/// Subset rows added to the truncated LP, unique per (type, subset).
class CutPool {
 public:
  /// False if the pair is already present.
  bool add(Cut cut);
  bool contains(int type, const std::vector<int>& subset) const;
  const std::vector<Cut>& cuts() const { return cuts_; }
  std::size_t size() const { return cuts_.size(); }

 private:
  std::vector<Cut> cuts_;
  std::set<std::pair<int, std::vector<int>>> keys_;
};

enum class SeparationRule { First, MostViolated };

struct SeparationResult {
  bool feasible = true;
  Cut cut;
  double lhs = 0.0;
  double violation = 0.0;
};

/// Knapsack separation over the subset rows
///   sum_{i in S} x_ij <= E[min(D_j, sum_{i in S} k_i)].
/// For every type and budget k, a 0/1 knapsack picks the subset of weight at
/// most k with the largest x-mass. `First` returns the first violated
/// (j, k) in lexicographic order; `MostViolated` the largest violation.
SeparationResult separation_oracle(const Eigen::VectorXd& x, const Instance& inst,
                                   SeparationRule rule = SeparationRule::MostViolated,
                                   double threshold = 1e-9);

/// Same verdict by enumerating all 2^n subsets per type.
SeparationResult exhaustive_separation(const Eigen::VectorXd& x, const Instance& inst,
                                       double threshold = 1e-9);

struct TruncatedLp {
  Lp lp;
  LpResult solution;
  CutPool pool;
  int rounds = 0;
};

/// Cutting-plane solve of the truncated LP. Starts from the capacity rows
/// and the S = [n] rows, adding one most-violated cut per round.
TruncatedLp build_truncated_lp(const Instance& inst, int max_rounds = 10000);

/// The truncated LP with every subset row written out; small n only.
Lp build_full_truncated_lp(const Instance& inst);

/// Conditional LP over y[t,i,j] for a stochastic horizon (Correl is
/// converted to identical rows).
Lp build_conditional_lp(const Instance& inst);

LpResult solve_conditional_lp(const Instance& inst);

/// Plain-text tableau dump (see README for the format).
void write_tableau(std::ostream& out, const Lp& lp);

/// "variable,value" CSV.
void write_solution_csv(std::ostream& out, const Lp& lp, const LpResult& sol);

}  // namespace stochmatch
