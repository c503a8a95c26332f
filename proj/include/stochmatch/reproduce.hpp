#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stochmatch/demand.hpp"
#include "stochmatch/numeric.hpp"
#include "stochmatch/rng.hpp"
#include "stochmatch/sim.hpp"

namespace stochmatch {

struct CheckResult {
  std::string id;
  std::string title;
  bool passed = false;
  /// One line per measured quantity.
  std::vector<std::string> detail;
  double seconds = 0.0;
  double limit_seconds = 0.0;
};

struct ReproduceOptions {
  std::uint64_t seed = 20240601;
  /// prop1i only: check a single eps instead of {1/2, 1/4, 1/8}.
  std::optional<double> eps;
};

/// prop1i, prop1ii, lemma1, typeround, typeround-props, thm1, prop2, lemma2,
/// thm2, prop4, prop5, separation.
const std::vector<std::string>& criterion_names();

/// Throws std::invalid_argument for unknown ids. A check that exceeds its
/// time limit fails.
CheckResult run_criterion(const std::string& id, const ReproduceOptions& opt = {});

/// Randomized suites: typeround, ocrs, orderings, separation, expansion.
const std::vector<std::string>& suite_names();
CheckResult run_suite(const std::string& name, std::uint64_t seed, int count);

/// "PASS prop1i  Fluid-LP gap ... (0.01 s)".
std::string format_result(const CheckResult& r);

/// Random single-type column in the truncated-LP polytope, built as the
/// marginals of a small mixture of random routings.
struct RationalColumn {
  DemandDistribution<Rational> law;
  std::vector<Rational> x;
};
RationalColumn random_feasible_column(Rng& rng, int max_resources, int max_support);

/// Pinned experiments behind the golden report.
std::vector<RatioEstimate> golden_report(std::uint64_t seed);

}  // namespace stochmatch
