#include "stochmatch/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

#include "stochmatch/lp.hpp"
#include "stochmatch/policies.hpp"
#include "stochmatch/sampling.hpp"

namespace stochmatch {

namespace {

Distribution two_point(int low, int high, double p_high) {
  std::map<int, double> entries;
  entries[low] += 1.0 - p_high;
  entries[high] += p_high;
  return Distribution::from_map(entries);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::string fixed6(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << v;
  std::string out = s.str();
  if (out == "-0.000000") out = "0.000000";
  return out;
}

/// Runs trial t on Rng(seed, t) across threads; the reduction walks the
/// trials in index order so the thread count never changes the result.
template <class Trial>
Estimate monte_carlo(const ExperimentConfig& cfg, Trial&& trial) {
  const std::size_t n = static_cast<std::size_t>(cfg.trials);
  std::vector<double> values(n);
  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t t = w; t < n; t += workers) {
          Rng rng(cfg.seed, t);
          values[t] = trial(rng);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double delta = values[t] - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (values[t] - mean);
  }
  Estimate e;
  e.value = mean;
  e.std_error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  e.mode = EvalMode::MonteCarlo;
  e.samples = n;
  return e;
}

}  // namespace

std::string GeneratorSpec::params_string() const {
  std::string out;
  for (const auto& [k, v] : params) {
    if (!out.empty()) out += ';';
    out += k + "=" + v;
  }
  return out;
}

std::string GeneratorSpec::to_string() const {
  std::string out = name;
  for (std::size_t i = 0; i < params.size(); ++i) {
    out += (i ? "," : ":") + params[i].first + "=" + params[i].second;
  }
  return out;
}

double GeneratorSpec::number(const std::string& key) const {
  for (const auto& [k, v] : params) {
    if (k == key) return parse_probability(v);
  }
  throw std::invalid_argument("generator " + name + " needs parameter '" + key + "'");
}

int GeneratorSpec::integer(const std::string& key) const {
  const double v = number(key);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw std::invalid_argument("parameter '" + key + "' must be an integer");
  }
  return static_cast<int>(v);
}

GeneratorSpec parse_generator(std::string_view text) {
  GeneratorSpec spec;
  const auto colon = text.find(':');
  spec.name = std::string(text.substr(0, colon));
  if (colon == std::string_view::npos) return spec;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    const auto eq = item.find('=');
    require(eq != std::string_view::npos && eq > 0,
            "generator parameter '" + std::string(item) + "' is not key=value");
    spec.params.emplace_back(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return spec;
}

Instance loose1_i(double eps) {
  require(eps > 0.0 && eps <= 1.0, "loose1_i needs eps in (0, 1]");
  Instance inst;
  inst.rewards = Eigen::MatrixXd::Ones(1, 1);
  inst.capacities = {1};
  const int top = static_cast<int>(std::ceil(1.0 / eps - 1e-9));
  inst.demand = IndepDemandModel{{two_point(0, top, eps)}};
  return inst;
}

Instance loose1_ii(int n) {
  require(n >= 1, "loose1_ii needs n >= 1");
  Instance inst;
  inst.rewards = Eigen::MatrixXd::Zero(n, 1);
  inst.rewards(0, 0) = 1.0;
  inst.capacities.assign(static_cast<std::size_t>(n), 1);
  inst.demand = IndepDemandModel{{two_point(0, n, 1.0 / n)}};
  return inst;
}

Instance main1tight(double eps, int k1) {
  require(eps > 0.0 && eps < 1.0, "main1tight needs eps in (0, 1)");
  require(k1 >= 1, "main1tight needs k1 >= 1");
  Instance inst;
  inst.rewards.resize(1, 2);
  inst.rewards << 1.0, 1.0 / eps;
  inst.capacities = {k1};
  inst.demand = IndepDemandModel{{Distribution::point_mass(k1), two_point(0, k1, eps)}};
  return inst;
}

Instance threshold_family(int T, double eps) {
  require(T >= 1, "threshold_family needs T >= 1");
  require(eps > 0.0 && eps < 1.0, "threshold_family needs eps in (0, 1)");
  std::vector<double> pmf(static_cast<std::size_t>(T) + 1, 0.0);
  for (int t = 1; t < T; ++t) pmf[static_cast<std::size_t>(t)] = std::pow(eps, t - 1) * (1.0 - eps);
  pmf[static_cast<std::size_t>(T)] = std::pow(eps, T - 1);
  StochasticHorizonModel model;
  model.total = Distribution(std::move(pmf));
  model.probs = Eigen::MatrixXd::Zero(T, T + 1);
  for (int t = 1; t <= T; ++t) {
    model.probs(t - 1, t) = eps;
    model.probs(t - 1, t - 1) = 1.0 - eps;
  }
  Instance inst;
  inst.rewards.resize(1, T + 1);
  for (int s = 0; s <= T; ++s) inst.rewards(0, s) = std::pow(eps, -s);
  inst.capacities = {1};
  inst.demand = std::move(model);
  inst.arrival = ArrivalPattern::RandomOrder;
  return inst;
}

Instance main2tight(int N) {
  require(N >= 2, "main2tight needs N >= 2");
  const double n = N;
  Instance inst;
  inst.rewards.resize(1, 2);
  inst.rewards << 1.0, n * n;
  inst.capacities = {1};
  inst.demand = CorrelDemandModel{two_point(1, 1 + N * N, 1.0 / n), {1.0 - 1.0 / (n * n * n), 1.0 / (n * n * n)}};
  inst.arrival = ArrivalPattern::RandomOrder;
  return inst;
}

const std::vector<std::string>& generator_names() {
  static const std::vector<std::string> names{"loose1_i", "loose1_ii", "main1tight", "threshold_family",
                                              "main2tight"};
  return names;
}

Instance gen_counterexample(const GeneratorSpec& spec) {
  if (spec.name == "loose1_i") return loose1_i(spec.number("eps"));
  if (spec.name == "loose1_ii") return loose1_ii(spec.integer("n"));
  if (spec.name == "main1tight") return main1tight(spec.number("eps"), spec.integer("k1"));
  if (spec.name == "threshold_family") return threshold_family(spec.integer("T"), spec.number("eps"));
  if (spec.name == "main2tight") return main2tight(spec.integer("N"));
  std::string known;
  for (const auto& n : generator_names()) known += (known.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown generator '" + spec.name + "' (known: " + known + ")");
}

Instance random_indep_instance(Rng& rng, const RandomIndepOptions& opt) {
  Instance inst;
  for (;;) {
    const int n = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(opt.max_resources)));
    inst.capacities.clear();
    for (int i = 0; i < n; ++i) {
      inst.capacities.push_back(1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(opt.max_capacity))));
    }
    if (opt.max_total_capacity <= 0 || inst.total_capacity() <= opt.max_total_capacity) break;
  }
  const int n = static_cast<int>(inst.capacities.size());
  const int m = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(opt.max_types)));
  inst.rewards.resize(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) inst.rewards(i, j) = rng.bernoulli(0.2) ? 0.0 : rng.uniform();
  }
  IndepDemandModel model;
  for (int j = 0; j < m; ++j) {
    std::vector<double> pmf(static_cast<std::size_t>(opt.max_support) + 1, 0.0);
    double total = 0.0;
    while (total == 0.0) {
      for (auto& p : pmf) {
        p = rng.bernoulli(0.6) ? 0.05 + rng.uniform() : 0.0;
        total += p;
      }
    }
    for (auto& p : pmf) p /= total;
    model.per_type.emplace_back(std::move(pmf));
  }
  inst.demand = std::move(model);
  return inst;
}

Instance random_horizon_instance(Rng& rng, const RandomHorizonOptions& opt) {
  const int T = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(opt.max_horizon)));
  const int n = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(opt.max_resources)));
  const int m = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(opt.max_types)));
  Instance inst;
  for (int i = 0; i < n; ++i) {
    inst.capacities.push_back(opt.fixed_capacity > 0
                                  ? opt.fixed_capacity
                                  : 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(opt.max_capacity))));
  }
  inst.rewards.resize(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) inst.rewards(i, j) = rng.bernoulli(0.15) ? 0.0 : rng.uniform();
  }
  std::vector<double> pmf(static_cast<std::size_t>(T) + 1, 0.0);
  double total = 0.0;
  for (int t = 0; t <= T; ++t) {
    const bool keep = t == T || (t == 0 ? rng.bernoulli(0.2) : rng.bernoulli(0.7));
    pmf[static_cast<std::size_t>(t)] = keep ? 0.05 + rng.uniform() : 0.0;
    total += pmf[static_cast<std::size_t>(t)];
  }
  for (auto& p : pmf) p /= total;
  StochasticHorizonModel model;
  model.total = Distribution(std::move(pmf));
  model.probs.resize(T, m);
  for (int t = 0; t < T; ++t) {
    double row = 0.0;
    for (int j = 0; j < m; ++j) {
      model.probs(t, j) = rng.bernoulli(0.85) ? 0.05 + rng.uniform() : 0.0;
      row += model.probs(t, j);
    }
    const double idle = opt.allow_no_query && rng.bernoulli(0.3) ? 0.05 + rng.uniform() : 0.0;
    row += idle;
    if (row == 0.0) {
      model.probs(t, 0) = 1.0;
      row = 1.0;
    }
    model.probs.row(t) /= row;
  }
  inst.demand = std::move(model);
  inst.arrival = ArrivalPattern::RandomOrder;
  return inst;
}

Eigen::VectorXd random_candidate(Rng& rng, const Instance& inst) {
  const int n = inst.num_resources();
  const int m = inst.num_types();
  const double scale = 0.5 + 2.0 * rng.uniform();
  Eigen::VectorXd x(static_cast<Eigen::Index>(n) * m);
  for (int j = 0; j < m; ++j) {
    const double mean = mean_demand(inst.demand, j);
    for (int i = 0; i < n; ++i) {
      const double share = rng.bernoulli(0.2) ? 0.0 : rng.uniform();
      x(x_index(i, j, m)) = scale * share * std::min(mean, 1.0) * 2.0 / n;
    }
  }
  return x;
}

const std::vector<std::string>& policy_names() {
  static const std::vector<std::string> names{"threshold", "horizon", "static-best", "opt", "off"};
  return names;
}

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{"fluid", "trunc", "cond", "off", "opt"};
  return names;
}

double benchmark_value(const Instance& inst, const std::string& benchmark) {
  auto solved = [](const LpResult& r) {
    if (r.status != LpStatus::Optimal) throw std::runtime_error(std::string("benchmark LP is ") + to_string(r.status));
    return r.objective_value;
  };
  if (benchmark == "fluid") return solved(solve_lp(build_fluid_lp(inst)));
  if (benchmark == "trunc") return solved(build_truncated_lp(inst).solution);
  if (benchmark == "cond") return solved(solve_conditional_lp(inst));
  if (benchmark == "off") return expected_offline(inst).value;
  if (benchmark == "opt") return optimal_online_dp(inst).value;
  throw std::invalid_argument("unknown benchmark '" + benchmark + "'");
}

RatioEstimate run_experiment(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (cfg.generator.has_value() == cfg.instance.has_value()) {
    throw std::invalid_argument("give exactly one of an instance or a generator");
  }
  const Instance inst = cfg.generator ? gen_counterexample(*cfg.generator) : *cfg.instance;
  validate(inst);
  RatioEstimate out;
  out.instance_id = cfg.instance_id;
  out.generator = cfg.generator ? cfg.generator->name : "file";
  out.params = cfg.generator ? cfg.generator->params_string() : "";
  out.policy = cfg.policy;
  out.benchmark = cfg.benchmark;
  out.seed = cfg.seed;

  OracleLimits limits;
  limits.seed = cfg.seed;
  limits.trials = cfg.trials;
  if (!cfg.exact) limits.exact_cap = 0;

  Estimate num;
  if (cfg.policy == "threshold") {
    const auto plan = plan_threshold_policy(inst);
    const OrderRule rule = inst.arrival == ArrivalPattern::Adversarial ? OrderRule::Worst : OrderRule::Random;
    if (cfg.exact || rule == OrderRule::Worst) {
      num = exact_policy_value(*plan, rule, limits);
    } else {
      num = monte_carlo(cfg, [&](Rng& rng) {
        ThresholdPolicy policy(plan);
        const auto d = sample_demand(inst.demand, inst.num_types(), rng);
        return run_policy(policy, sample_random_order(d, rng).types, rng).total_reward();
      });
    }
  } else if (cfg.policy == "horizon") {
    const auto plan = build_horizon_policy(inst);
    if (cfg.exact) {
      num.value = exact_policy_value(*plan);
    } else {
      num = monte_carlo(cfg, [&](Rng& rng) {
        HorizonPolicy policy(plan);
        return run_policy(policy, sample_horizon_steps(plan->model, rng), rng).total_reward();
      });
    }
  } else if (cfg.policy == "static-best") {
    num.value = best_static_threshold(inst).value;
  } else if (cfg.policy == "opt") {
    num.value = optimal_online_dp(inst).value;
  } else if (cfg.policy == "off") {
    num = expected_offline(inst, limits);
  } else {
    throw std::invalid_argument("unknown policy '" + cfg.policy + "'");
  }
  out.numerator = num.value;
  out.std_error = num.std_error;
  out.mode = num.mode;
  out.trials = num.mode == EvalMode::Exact ? 0 : static_cast<int>(num.samples);
  out.denominator = benchmark_value(inst, cfg.benchmark);
  if (out.denominator != 0.0) {
    out.ratio = out.numerator / out.denominator;
  } else {
    out.ratio = out.numerator == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return out;
}

void write_report_csv(std::ostream& out, const std::vector<RatioEstimate>& rows) {
  std::ostringstream s;
  s << "instance_id,generator,params,policy,benchmark,numerator,denominator,ratio,stderr,trials,seed,mode\n";
  for (const auto& r : rows) {
    s << r.instance_id << ',' << r.generator << ',' << r.params << ',' << r.policy << ',' << r.benchmark << ','
      << fixed6(r.numerator) << ',' << fixed6(r.denominator) << ',' << fixed6(r.ratio) << ','
      << fixed6(r.std_error) << ',' << r.trials << ',' << r.seed << ',' << to_string(r.mode) << '\n';
  }
  out << s.str();
}

void write_report_markdown(std::ostream& out, const std::vector<RatioEstimate>& rows) {
  std::ostringstream s;
  s << "| instance | generator | params | policy | benchmark | numerator | denominator | ratio | stderr | trials | seed | mode |\n";
  s << "|---|---|---|---|---|---:|---:|---:|---:|---:|---:|---|\n";
  for (const auto& r : rows) {
    s << "| " << r.instance_id << " | " << r.generator << " | " << r.params << " | " << r.policy << " | "
      << r.benchmark << " | " << fixed6(r.numerator) << " | " << fixed6(r.denominator) << " | " << fixed6(r.ratio)
      << " | " << fixed6(r.std_error) << " | " << r.trials << " | " << r.seed << " | " << to_string(r.mode) << " |\n";
  }
  out << s.str();
}

}  // namespace stochmatch
