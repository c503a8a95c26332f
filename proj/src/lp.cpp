#include "stochmatch/lp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace stochmatch {

namespace {

std::vector<Distribution> marginals(const Instance& inst) {
  if (is_horizon(inst)) {
    throw std::invalid_argument("stochastic-horizon demand needs the conditional LP");
  }
  std::vector<Distribution> out;
  for (int j = 0; j < inst.num_types(); ++j) out.push_back(marginal(inst.demand, j));
  return out;
}

std::string x_name(int i, int j) {
  return "x[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]";
}

Lp base_lp(const Instance& inst) {
  const int n = inst.num_resources();
  const int m = inst.num_types();
  Lp lp(static_cast<Eigen::Index>(n) * m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      lp.objective(x_index(i, j, m)) = inst.rewards(i, j);
      lp.variable_names.push_back(x_name(i, j));
    }
  }
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(lp.num_variables());
    for (int j = 0; j < m; ++j) row(x_index(i, j, m)) = 1.0;
    lp.add_row(row, inst.capacities[static_cast<std::size_t>(i)],
               "capacity[" + std::to_string(i + 1) + "]");
  }
  return lp;
}

Eigen::VectorXd subset_row(const Instance& inst, int type, const std::vector<int>& subset) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(inst.num_resources()) *
                                              inst.num_types());
  for (const int i : subset) row(x_index(i, type, inst.num_types())) = 1.0;
  return row;
}

std::string subset_name(int type, const std::vector<int>& subset) {
  std::string s = "demand[" + std::to_string(type + 1) + ";";
  for (std::size_t k = 0; k < subset.size(); ++k) {
    s += (k ? "," : "") + std::to_string(subset[k] + 1);
  }
  return s + "]";
}

int subset_capacity(const Instance& inst, const std::vector<int>& subset) {
  int total = 0;
  for (const int i : subset) total += inst.capacities[static_cast<std::size_t>(i)];
  return total;
}

}  // namespace

Lp build_fluid_lp(const Instance& inst) {
  if (is_horizon(inst)) {
    throw std::invalid_argument("stochastic-horizon demand needs the conditional LP");
  }
  Lp lp = base_lp(inst);
  for (int j = 0; j < inst.num_types(); ++j) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(lp.num_variables());
    for (int i = 0; i < inst.num_resources(); ++i) row(x_index(i, j, inst.num_types())) = 1.0;
    lp.add_row(row, mean_demand(inst.demand, j), "demand[" + std::to_string(j + 1) + "]");
  }
  return lp;
}

bool CutPool::add(Cut cut) {
  if (!keys_.emplace(cut.type, cut.subset).second) return false;
  cuts_.push_back(std::move(cut));
  return true;
}

bool CutPool::contains(int type, const std::vector<int>& subset) const {
  return keys_.count({type, subset}) > 0;
}

SeparationResult separation_oracle(const Eigen::VectorXd& x, const Instance& inst,
                                   SeparationRule rule, double threshold) {
  const int n = inst.num_resources();
  const int m = inst.num_types();
  if (x.size() != static_cast<Eigen::Index>(n) * m) {
    throw std::invalid_argument("candidate vector has the wrong length");
  }
  const auto laws = marginals(inst);
  const int budget = inst.total_capacity();
  SeparationResult best;
  for (int j = 0; j < m; ++j) {
    // value[i][c]: best x-mass using resources < i within weight c.
    std::vector<std::vector<double>> value(static_cast<std::size_t>(n) + 1,
                                           std::vector<double>(static_cast<std::size_t>(budget) + 1, 0.0));
    for (int i = 0; i < n; ++i) {
      const int w = inst.capacities[static_cast<std::size_t>(i)];
      const double v = x(x_index(i, j, m));
      auto& cur = value[static_cast<std::size_t>(i) + 1];
      const auto& prev = value[static_cast<std::size_t>(i)];
      for (int c = 0; c <= budget; ++c) {
        cur[static_cast<std::size_t>(c)] = prev[static_cast<std::size_t>(c)];
        if (c >= w && prev[static_cast<std::size_t>(c - w)] + v > cur[static_cast<std::size_t>(c)]) {
          cur[static_cast<std::size_t>(c)] = prev[static_cast<std::size_t>(c - w)] + v;
        }
      }
    }
    for (int k = 1; k <= budget; ++k) {
      const double lhs = value[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
      if (lhs <= laws[static_cast<std::size_t>(j)].truncated_expectation(k) + threshold) continue;
      std::vector<int> subset;
      for (int i = n, c = k; i > 0; --i) {
        const auto& row = value[static_cast<std::size_t>(i)];
        if (row[static_cast<std::size_t>(c)] != value[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(c)]) {
          subset.push_back(i - 1);
          c -= inst.capacities[static_cast<std::size_t>(i) - 1];
        }
      }
      std::reverse(subset.begin(), subset.end());
      // The subset's own row is at least as tight as the budget-k bound.
      const double rhs = laws[static_cast<std::size_t>(j)].truncated_expectation(subset_capacity(inst, subset));
      const double violation = lhs - rhs;
      if (best.feasible || violation > best.violation) {
        best.feasible = false;
        best.cut = Cut{j, subset, rhs};
        best.lhs = lhs;
        best.violation = violation;
        if (rule == SeparationRule::First) return best;
      }
    }
  }
  return best;
}

SeparationResult exhaustive_separation(const Eigen::VectorXd& x, const Instance& inst,
                                       double threshold) {
  const int n = inst.num_resources();
  const int m = inst.num_types();
  if (n > 24) throw std::invalid_argument("exhaustive separation is limited to n <= 24");
  const auto laws = marginals(inst);
  SeparationResult best;
  for (int j = 0; j < m; ++j) {
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      double lhs = 0.0;
      int cap = 0;
      std::vector<int> subset;
      for (int i = 0; i < n; ++i) {
        if (mask >> i & 1u) {
          lhs += x(x_index(i, j, m));
          cap += inst.capacities[static_cast<std::size_t>(i)];
          subset.push_back(i);
        }
      }
      const double rhs = laws[static_cast<std::size_t>(j)].truncated_expectation(cap);
      if (lhs > rhs + threshold && (best.feasible || lhs - rhs > best.violation)) {
        best.feasible = false;
        best.cut = Cut{j, subset, rhs};
        best.lhs = lhs;
        best.violation = lhs - rhs;
      }
    }
  }
  return best;
}

TruncatedLp build_truncated_lp(const Instance& inst, int max_rounds) {
  const auto laws = marginals(inst);
  TruncatedLp out;
  out.lp = base_lp(inst);
  std::vector<int> everyone(static_cast<std::size_t>(inst.num_resources()));
  std::iota(everyone.begin(), everyone.end(), 0);
  for (int j = 0; j < inst.num_types(); ++j) {
    Cut cut{j, everyone, laws[static_cast<std::size_t>(j)].truncated_expectation(inst.total_capacity())};
    out.lp.add_row(subset_row(inst, j, everyone), cut.rhs, subset_name(j, everyone));
    out.pool.add(std::move(cut));
  }
  for (;;) {
    out.solution = solve_lp(out.lp);
    if (out.solution.status != LpStatus::Optimal) return out;
    const auto sep = separation_oracle(out.solution.values, inst);
    if (sep.feasible) return out;
    if (out.rounds >= max_rounds) {
      throw std::runtime_error("truncated LP did not converge within " +
                               std::to_string(max_rounds) + " cut rounds");
    }
    if (out.pool.contains(sep.cut.type, sep.cut.subset)) {
      throw std::runtime_error("truncated LP solution violates one of its own cuts by " +
                               std::to_string(sep.violation));
    }
    out.lp.add_row(subset_row(inst, sep.cut.type, sep.cut.subset), sep.cut.rhs,
                   subset_name(sep.cut.type, sep.cut.subset));
    out.pool.add(sep.cut);
    ++out.rounds;
  }
}

Lp build_full_truncated_lp(const Instance& inst) {
  const int n = inst.num_resources();
  if (n > 20) throw std::invalid_argument("full truncated LP is limited to n <= 20");
  const auto laws = marginals(inst);
  Lp lp = base_lp(inst);
  for (int j = 0; j < inst.num_types(); ++j) {
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      std::vector<int> subset;
      for (int i = 0; i < n; ++i) {
        if (mask >> i & 1u) subset.push_back(i);
      }
      lp.add_row(subset_row(inst, j, subset),
                 laws[static_cast<std::size_t>(j)].truncated_expectation(subset_capacity(inst, subset)),
                 subset_name(j, subset));
    }
  }
  return lp;
}

Lp build_conditional_lp(const Instance& inst) {
  if (is_indep(inst)) {
    throw std::invalid_argument("the conditional LP needs correl or horizon demand");
  }
  const StochasticHorizonModel model = to_horizon(inst.demand);
  const int n = inst.num_resources();
  const int m = inst.num_types();
  const int T = model.horizon();
  const auto survival = model.total.survival_vector(T);
  Lp lp(static_cast<Eigen::Index>(T) * n * m);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        lp.objective(y_index(t, i, j, n, m)) = survival[static_cast<std::size_t>(t)] * inst.rewards(i, j);
        lp.variable_names.push_back("y[" + std::to_string(t + 1) + "," + std::to_string(i + 1) +
                                    "," + std::to_string(j + 1) + "]");
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(lp.num_variables());
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < m; ++j) row(y_index(t, i, j, n, m)) = 1.0;
    }
    lp.add_row(row, inst.capacities[static_cast<std::size_t>(i)],
               "capacity[" + std::to_string(i + 1) + "]");
  }
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(lp.num_variables());
      for (int i = 0; i < n; ++i) row(y_index(t, i, j, n, m)) = 1.0;
      lp.add_row(row, model.probs(t, j),
                 "arrival[" + std::to_string(t + 1) + "," + std::to_string(j + 1) + "]");
    }
  }
  return lp;
}

LpResult solve_conditional_lp(const Instance& inst) { return solve_lp(build_conditional_lp(inst)); }

void write_tableau(std::ostream& out, const Lp& lp) {
  std::ostringstream s;
  s << std::setprecision(12);
  s << "maximize";
  for (Eigen::Index v = 0; v < lp.num_variables(); ++v) {
    if (lp.objective(v) != 0.0) s << ' ' << std::showpos << lp.objective(v) << std::noshowpos << ' ' << lp.variable_names[static_cast<std::size_t>(v)];
  }
  s << "\nsubject to\n";
  for (Eigen::Index r = 0; r < lp.num_rows(); ++r) {
    s << "  " << lp.row_names[static_cast<std::size_t>(r)] << ':';
    for (Eigen::Index v = 0; v < lp.num_variables(); ++v) {
      const double a = lp.constraints(r, v);
      if (a != 0.0) s << ' ' << std::showpos << a << std::noshowpos << ' ' << lp.variable_names[static_cast<std::size_t>(v)];
    }
    s << " <= " << lp.rhs(r) << '\n';
  }
  s << "variables " << lp.num_variables() << " >= 0, rows " << lp.num_rows() << '\n';
  out << s.str();
}

void write_solution_csv(std::ostream& out, const Lp& lp, const LpResult& sol) {
  out << "variable,value\n";
  std::ostringstream s;
  s << std::fixed << std::setprecision(6);
  for (Eigen::Index v = 0; v < lp.num_variables(); ++v) {
    // Clear round-off so no "-0.000000" is printed.
    const double value = std::abs(sol.values(v)) < 5e-7 ? 0.0 : sol.values(v);
    s << lp.variable_names[static_cast<std::size_t>(v)] << ',' << value << '\n';
  }
  out << s.str();
}

}  // namespace stochmatch
