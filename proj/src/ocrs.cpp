#include "stochmatch/ocrs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace stochmatch {

namespace {

struct Pass {
  bool feasible = true;
  std::vector<double> availability;
  std::vector<double> accept;
};

// Forward pass with accept[t] = gamma / availability[t].
Pass run(const std::vector<double>& rates, int capacity, double gamma) {
  Pass out;
  std::vector<double> law(static_cast<std::size_t>(capacity) + 1, 0.0);
  law[0] = 1.0;
  for (const double y : rates) {
    const double avail = std::accumulate(law.begin(), law.end() - 1, 0.0);
    double c = 0.0;
    if (y > 0.0) {
      if (gamma > avail) {
        out.feasible = false;
        c = 1.0;
      } else {
        c = avail > 0.0 ? gamma / avail : 0.0;
      }
    }
    out.availability.push_back(avail);
    out.accept.push_back(c);
    const double move = y * c;
    for (int k = capacity - 1; k >= 0; --k) {
      const double flow = law[static_cast<std::size_t>(k)] * move;
      law[static_cast<std::size_t>(k)] -= flow;
      law[static_cast<std::size_t>(k) + 1] += flow;
    }
  }
  return out;
}

}  // namespace

double ocrs_bound(int capacity) { return 1.0 - 1.0 / std::sqrt(static_cast<double>(capacity) + 3.0); }

OcrsPlan ocrs_plan(const std::vector<double>& rates, int capacity) {
  if (capacity < 1) throw std::invalid_argument("OCRS capacity must be at least 1");
  double total = 0.0;
  for (const double y : rates) {
    if (!(y >= 0.0 && y <= 1.0 + 1e-12)) throw std::invalid_argument("OCRS rate outside [0, 1]");
    total += y;
  }
  if (total > capacity + 1e-9) {
    throw std::invalid_argument("OCRS rates sum to " + std::to_string(total) + " > capacity " +
                                std::to_string(capacity));
  }
  OcrsPlan plan;
  plan.rates = rates;
  for (auto& y : plan.rates) y = std::min(y, 1.0);
  plan.capacity = capacity;
  double lo = 0.0;
  double hi = 1.0;
  if (run(plan.rates, capacity, hi).feasible) {
    lo = hi;
  } else {
    while (hi - lo > 1e-9) {
      const double mid = 0.5 * (lo + hi);
      (run(plan.rates, capacity, mid).feasible ? lo : hi) = mid;
    }
  }
  plan.gamma = lo;
  auto pass = run(plan.rates, capacity, lo);
  plan.availability = std::move(pass.availability);
  plan.accept = std::move(pass.accept);
  plan.meets_bound = plan.gamma >= ocrs_bound(capacity) - 1e-9;
  return plan;
}

std::vector<double> ocrs_acceptance(const OcrsPlan& plan) {
  std::vector<double> law(static_cast<std::size_t>(plan.capacity) + 1, 0.0);
  law[0] = 1.0;
  std::vector<double> out;
  for (std::size_t t = 0; t < plan.rates.size(); ++t) {
    const double move = plan.rates[t] * plan.accept[t];
    double accepted = 0.0;
    for (int k = plan.capacity - 1; k >= 0; --k) {
      const double flow = law[static_cast<std::size_t>(k)] * move;
      accepted += flow;
      law[static_cast<std::size_t>(k)] -= flow;
      law[static_cast<std::size_t>(k) + 1] += flow;
    }
    out.push_back(accepted);
  }
  return out;
}

}  // namespace stochmatch
