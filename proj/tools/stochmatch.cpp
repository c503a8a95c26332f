// Command-line front end: solve, round, simulate, reproduce, verify-invariants.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "stochmatch/io.hpp"
#include "stochmatch/lp.hpp"
#include "stochmatch/oracles.hpp"
#include "stochmatch/policies.hpp"
#include "stochmatch/reproduce.hpp"
#include "stochmatch/sampling.hpp"
#include "stochmatch/sim.hpp"
#include "stochmatch/typeround.hpp"

using namespace stochmatch;

namespace {

constexpr int kPass = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Source {
  std::string file;
  std::string example;
  std::string generator;

  void attach(CLI::App* cmd) {
    auto* f = cmd->add_option("-i,--instance", file, "instance JSON file");
    auto* e = cmd->add_option("-e,--example", example, "built-in instance (three-unit, five-unit)");
    auto* g = cmd->add_option("-g,--generator", generator, "generator spec, e.g. main1tight:eps=0.1,k1=2");
    f->excludes(e)->excludes(g);
    e->excludes(g);
  }

  bool given() const { return !file.empty() || !example.empty() || !generator.empty(); }

  InstanceFile load() const {
    if (!given()) throw UsageError("give one of --instance, --example or --generator");
    if (!file.empty()) return load_instance(file);
    if (!example.empty()) return load_example(example);
    InstanceFile out;
    out.name = generator;
    out.instance = gen_counterexample(parse_generator(generator));
    return out;
  }
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("STOCHMATCH_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("STOCHMATCH_SEED is not an unsigned integer: '") + env + "'");
  }
  return 20240601;
}

/// Writes to --output when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw UsageError("cannot write '" + path + "'");
    }
  }
  std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::string fixed6(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << v;
  return s.str();
}

int cmd_solve(const Source& src, const std::string& which, bool tableau, const std::string& output) {
  const InstanceFile f = src.load();
  const Instance& inst = f.instance;
  Lp lp(0);
  LpResult sol;
  if (which == "fluid") {
    lp = build_fluid_lp(inst);
    sol = solve_lp(lp);
  } else if (which == "trunc") {
    auto t = build_truncated_lp(inst);
    lp = std::move(t.lp);
    sol = std::move(t.solution);
  } else {
    lp = build_conditional_lp(inst);
    sol = solve_lp(lp);
  }
  std::cout << "lp " << which << " status " << to_string(sol.status);
  if (sol.status == LpStatus::Optimal) std::cout << " value " << fixed6(sol.objective_value);
  std::cout << '\n';
  if (tableau) write_tableau(std::cout, lp);
  if (sol.status != LpStatus::Optimal) return kCheckFailed;
  Sink sink(output);
  write_solution_csv(sink.out(), lp, sol);
  return kPass;
}

template <class Scalar>
std::string show(const Scalar& v) {
  if constexpr (ScalarTraits<Scalar>::kExact) {
    return to_string(v);
  } else {
    return fixed6(v);
  }
}

template <class Scalar>
int print_rounding(const std::vector<Scalar>& x, const DemandDistribution<Scalar>& law, std::ostream& out) {
  const auto plan = typeround<Scalar>(x, law);
  const auto rd = plan.expand();
  out << "routing,probability\n";
  for (const auto& b : rd.branches) out << format_routing(b.routing) << ',' << show(b.probability) << '\n';
  out << "stages\n";
  for (const auto& s : plan.stages()) {
    out << "  resource " << s.resource + 1 << " segment " << s.segment + 1 << " lambda " << show(s.lambda) << '\n';
  }
  const auto rep = verify_marginals(rd, x, law);
  out << "marginals";
  for (const auto& a : rep.achieved) out << ' ' << show(a);
  out << "\nmax marginal error " << show(rep.max_error) << '\n';
  bool ok = rep.max_error <= default_round_tolerance<Scalar>() * 10;
  for (int t = 0; t <= plan.num_resources(); ++t) {
    const auto inv = check_invariants(plan, t);
    if (!inv.ok) {
      out << "invariant FAIL: " << inv.failure << '\n';
      ok = false;
    }
  }
  out << "invariants " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kPass : kCheckFailed;
}

int cmd_round(const Source& src, int type, const std::string& mode, const std::string& output) {
  const InstanceFile f = src.load();
  const Instance& inst = f.instance;
  if (!is_indep(inst)) throw UsageError("round needs an indep instance");
  if (type < 1 || type > inst.num_types()) throw UsageError("--type must lie in 1.." + std::to_string(inst.num_types()));
  const int j = type - 1;
  const bool have_column = f.column.has_value() && inst.num_types() == 1;
  const std::string use = mode.empty() ? (have_column ? "rational" : "double") : mode;
  Sink sink(output);
  if (use == "rational") {
    if (!have_column || f.exact_laws.empty()) {
      throw UsageError("rational mode needs an instance file with an exact \"column\"");
    }
    return print_rounding<Rational>(*f.column, f.exact_laws.front(), sink.out());
  }
  std::vector<double> x;
  if (have_column) {
    for (const auto& v : *f.column) x.push_back(to_double(v));
  } else {
    const auto lp = build_truncated_lp(inst);
    if (lp.solution.status != LpStatus::Optimal) throw std::runtime_error("truncated LP is not optimal");
    for (int i = 0; i < inst.num_resources(); ++i) {
      x.push_back(std::max(0.0, lp.solution.values(x_index(i, j, inst.num_types()))));
    }
  }
  if (inst.total_capacity() != inst.num_resources()) throw UsageError("round needs unit capacities");
  return print_rounding<double>(x, marginal(inst.demand, j), sink.out());
}

int cmd_simulate(const Source& src, ExperimentConfig cfg, const std::string& format, bool trace,
                 const std::string& output) {
  if (!src.generator.empty()) {
    cfg.generator = parse_generator(src.generator);
    cfg.instance_id = src.generator;
  } else {
    const InstanceFile f = src.load();
    cfg.instance = f.instance;
    cfg.instance_id = f.name.empty() ? (src.file.empty() ? src.example : src.file) : f.name;
  }
  const RatioEstimate r = run_experiment(cfg);
  Sink sink(output);
  if (format == "md") {
    write_report_markdown(sink.out(), {r});
  } else {
    write_report_csv(sink.out(), {r});
  }
  if (trace) {
    const Instance inst = cfg.generator ? gen_counterexample(*cfg.generator) : *cfg.instance;
    Rng rng(cfg.seed, 0);
    PolicyTrace t;
    if (cfg.policy == "threshold") {
      ThresholdPolicy p(plan_threshold_policy(inst));
      const auto d = sample_demand(inst.demand, inst.num_types(), rng);
      t = run_policy(p, sample_random_order(d, rng).types, rng);
    } else if (cfg.policy == "horizon") {
      const auto plan = build_horizon_policy(inst);
      HorizonPolicy p(plan);
      t = run_policy(p, sample_horizon_steps(plan->model, rng), rng);
    } else {
      throw UsageError("--trace needs --policy threshold or horizon");
    }
    t.seed = cfg.seed;
    std::cout << "trace\n";
    write_trace_csv(std::cout, t);
  }
  return kPass;
}

int cmd_reproduce(const std::string& name, const ReproduceOptions& opt, const std::string& output) {
  if (name == "report") {
    Sink sink(output);
    write_report_csv(sink.out(), golden_report(opt.seed));
    return kPass;
  }
  std::vector<std::string> ids;
  if (name == "all") {
    ids = criterion_names();
  } else {
    ids.push_back(name);
  }
  if (opt.eps && name != "prop1i") throw UsageError("--eps only applies to prop1i");
  Sink sink(output);
  bool ok = true;
  for (const auto& id : ids) {
    const CheckResult r = run_criterion(id, opt);
    sink.out() << format_result(r) << std::flush;
    ok = ok && r.passed;
  }
  return ok ? kPass : kCheckFailed;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, int count) {
  std::vector<std::string> names;
  if (suite == "all") {
    names = suite_names();
  } else {
    names.push_back(suite);
  }
  bool ok = true;
  for (const auto& n : names) {
    const CheckResult r = run_suite(n, seed, count);
    std::cout << format_result(r) << std::flush;
    ok = ok && r.passed;
  }
  return ok ? kPass : kCheckFailed;
}

std::string joined(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online stochastic matching: LPs, rounding, policies and oracles"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string output;

  auto* solve = app.add_subcommand("solve", "solve the fluid, truncated or conditional LP");
  Source solve_src;
  solve_src.attach(solve);
  std::string lp = "trunc";
  bool tableau = false;
  solve->add_option("--lp", lp, "fluid | trunc | cond")->check(CLI::IsMember({"fluid", "trunc", "cond"}));
  solve->add_flag("--tableau", tableau, "print the LP before solving");
  solve->add_option("-o,--output", output, "write the solution CSV here");

  auto* round = app.add_subcommand("round", "run TypeRound on one LP column");
  Source round_src;
  round_src.attach(round);
  int type = 1;
  std::string mode;
  round->add_option("--type", type, "type whose column to round (1-based)");
  round->add_option("--mode", mode, "rational | double (rational when the file carries a column)")
      ->check(CLI::IsMember({"rational", "double"}));
  round->add_option("-o,--output", output, "write the table here");

  auto* simulate = app.add_subcommand("simulate", "run one experiment and print a report row");
  Source sim_src;
  sim_src.attach(simulate);
  ExperimentConfig cfg;
  bool monte_carlo = false;
  std::string format = "csv";
  bool trace = false;
  simulate->add_option("--policy", cfg.policy, "policy")->check(CLI::IsMember(policy_names()));
  simulate->add_option("--benchmark", cfg.benchmark, "benchmark")->check(CLI::IsMember(benchmark_names()));
  simulate->add_option("--trials", cfg.trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
  simulate->add_flag("--monte-carlo", monte_carlo, "estimate by simulation instead of exact oracles");
  simulate->add_option("--format", format, "csv | md")->check(CLI::IsMember({"csv", "md"}));
  simulate->add_flag("--trace", trace, "also print one sampled run step by step");
  simulate->add_option("--seed", seed, "RNG seed (default $STOCHMATCH_SEED)");
  simulate->add_option("-o,--output", output, "write the report here");

  auto* reproduce = app.add_subcommand("reproduce", "run a pinned acceptance check");
  std::string target;
  std::optional<double> eps;
  std::vector<std::string> targets = criterion_names();
  targets.push_back("all");
  targets.push_back("report");
  reproduce->add_option("name", target, "one of: " + joined(targets))->required()->check(CLI::IsMember(targets));
  reproduce->add_option("--eps", eps, "prop1i: single eps in (0, 1]");
  reproduce->add_option("--seed", seed, "RNG seed (default $STOCHMATCH_SEED)");
  reproduce->add_option("-o,--output", output, "write results here");

  auto* verify = app.add_subcommand("verify-invariants", "randomized property suites");
  std::vector<std::string> suites = suite_names();
  suites.push_back("all");
  std::string suite = "all";
  int count = 200;
  verify->add_option("--suite", suite, "one of: " + joined(suites))->check(CLI::IsMember(suites));
  verify->add_option("--count", count, "cases per suite")->check(CLI::PositiveNumber);
  verify->add_option("--seed", seed, "RNG seed (default $STOCHMATCH_SEED)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    const std::uint64_t s = seed ? *seed : default_seed();
    if (*solve) return cmd_solve(solve_src, lp, tableau, output);
    if (*round) return cmd_round(round_src, type, mode, output);
    if (*simulate) {
      cfg.seed = s;
      cfg.exact = !monte_carlo;
      return cmd_simulate(sim_src, cfg, format, trace, output);
    }
    if (*reproduce) {
      ReproduceOptions opt;
      opt.seed = s;
      opt.eps = eps;
      return cmd_reproduce(target, opt, output);
    }
    if (*verify) return cmd_verify(suite, s, count);
  } catch (const InstanceFormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kUsage;
}
