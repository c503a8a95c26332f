#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stochmatch/instance.hpp"
#include "stochmatch/oracles.hpp"
#include "stochmatch/rng.hpp"

namespace stochmatch {

/// "main1tight:eps=0.1,k1=2".
struct GeneratorSpec {
  std::string name;
  std::vector<std::pair<std::string, std::string>> params;

  /// "eps=0.1;k1=2" (semicolons keep the CSV column unquoted).
  std::string params_string() const;
  std::string to_string() const;
  /// Throws std::invalid_argument if the key is missing.
  double number(const std::string& key) const;
  int integer(const std::string& key) const;
};

GeneratorSpec parse_generator(std::string_view text);

/// n = m = 1, r = 1, D in {0, ceil(1/eps)} with probabilities {1 - eps, eps}.
Instance loose1_i(double eps);
/// n unit resources, m = 1, r = e_1, D in {0, n} with probabilities {1 - 1/n, 1/n}.
Instance loose1_ii(int n);
/// n = 1, k = k1, r = (1, 1/eps), D_1 = k1, D_2 in {0, k1} w.p. {1 - eps, eps}.
Instance main1tight(double eps, int k1);
/// n = k = 1, Pr[D > t | D >= t] = eps for t < T; step t draws reward
/// eps^-t w.p. eps and eps^-(t-1) otherwise. Types are the rewards eps^-s,
/// s = 0..T.
Instance threshold_family(int T, double eps);
/// n = k = 1, r = (1, N^2), D in {1, 1 + N^2} w.p. {1 - 1/N, 1/N},
/// p = (1 - 1/N^3, 1/N^3).
Instance main2tight(int N);

/// Dispatches on spec.name; throws std::invalid_argument for unknown names
/// or bad parameters.
Instance gen_counterexample(const GeneratorSpec& spec);

const std::vector<std::string>& generator_names();

struct RandomIndepOptions {
  int max_resources = 4;
  int max_types = 4;
  int max_support = 4;
  int max_capacity = 1;
  /// Cap on sum_i k_i (0 for none).
  int max_total_capacity = 0;
};

/// Random Indep instance: rewards uniform on [0, 1] with some zeros,
/// demand pmfs on {0..max_support} with random weights.
Instance random_indep_instance(Rng& rng, const RandomIndepOptions& opt = {});

struct RandomHorizonOptions {
  int max_horizon = 4;
  int max_resources = 3;
  int max_types = 3;
  int max_capacity = 2;
  /// When positive every capacity equals this value.
  int fixed_capacity = 0;
  /// Allow rows summing to less than one.
  bool allow_no_query = true;
};

Instance random_horizon_instance(Rng& rng, const RandomHorizonOptions& opt = {});

/// Random nonnegative vector over n x m entries; about half the draws are
/// scaled past the truncated-LP polytope.
Eigen::VectorXd random_candidate(Rng& rng, const Instance& inst);

struct ExperimentConfig {
  std::string instance_id;
  std::optional<GeneratorSpec> generator;
  std::optional<Instance> instance;
  /// threshold | horizon | static-best | opt | off
  std::string policy = "threshold";
  /// fluid | trunc | cond | off | opt
  std::string benchmark = "off";
  int trials = 1;
  std::uint64_t seed = 0;
  bool exact = true;
};

struct RatioEstimate {
  std::string instance_id;
  std::string generator;
  std::string params;
  std::string policy;
  std::string benchmark;
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
  double std_error = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
  EvalMode mode = EvalMode::Exact;
};

const std::vector<std::string>& policy_names();
const std::vector<std::string>& benchmark_names();

double benchmark_value(const Instance& inst, const std::string& benchmark);

/// Deterministic given the config. Monte-Carlo trials use Rng(seed, trial).
RatioEstimate run_experiment(const ExperimentConfig& cfg);

/// Columns: instance_id, generator, params, policy, benchmark, numerator,
/// denominator, ratio, stderr, trials, seed, mode. Reals with 6 decimals.
void write_report_csv(std::ostream& out, const std::vector<RatioEstimate>& rows);
void write_report_markdown(std::ostream& out, const std::vector<RatioEstimate>& rows);

}  // namespace stochmatch
