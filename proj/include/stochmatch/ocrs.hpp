#pragma once

#include <vector>

namespace stochmatch {

/// Single-resource OCRS with a uniform selectability target.
///
/// Step t is active independently with probability rates[t]. An active step
/// that finds capacity left is accepted with probability
/// accept[t] = gamma / availability[t], so every step is accepted
/// unconditionally with probability exactly gamma * rates[t].
struct OcrsPlan {
  std::vector<double> rates;
  int capacity = 1;
  double gamma = 0.0;
  std::vector<double> accept;
  /// Pr[fewer than `capacity` acceptances before step t].
  std::vector<double> availability;
  /// gamma >= 1 - 1/sqrt(k+3) (which is 1/2 at k = 1).
  bool meets_bound = true;
};

double ocrs_bound(int capacity);

/// Largest uniform gamma (bisection to 1e-9) with every accept[t] <= 1.
/// Throws std::invalid_argument if sum(rates) > capacity + 1e-9 or a rate
/// lies outside [0, 1].
OcrsPlan ocrs_plan(const std::vector<double>& rates, int capacity);

/// Per-step unconditional acceptance probabilities of a plan, recomputed by
/// forward DP over the accepted-count law.
std::vector<double> ocrs_acceptance(const OcrsPlan& plan);

}  // namespace stochmatch
