#include "stochmatch/reproduce.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include "stochmatch/io.hpp"
#include "stochmatch/lp.hpp"
#include "stochmatch/ocrs.hpp"
#include "stochmatch/oracles.hpp"
#include "stochmatch/policies.hpp"
#include "stochmatch/typeround.hpp"

namespace stochmatch {

namespace {

constexpr double kSlack = 1e-9;

std::string num(double v, int digits = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

/// Collects detail lines; the first failure sticks.
struct Check {
  CheckResult& r;
  void note(std::string line) { r.detail.push_back(std::move(line)); }
  bool expect(bool ok, const std::string& line) {
    note((ok ? "ok   " : "FAIL ") + line);
    if (!ok) r.passed = false;
    return ok;
  }
};

double lp_value(const LpResult& sol, const char* what) {
  if (sol.status != LpStatus::Optimal) throw std::runtime_error(std::string(what) + " is " + to_string(sol.status));
  return sol.objective_value;
}

double fluid(const Instance& inst) { return lp_value(solve_lp(build_fluid_lp(inst)), "fluid LP"); }
double trunc(const Instance& inst) { return lp_value(build_truncated_lp(inst).solution, "truncated LP"); }
double cond(const Instance& inst) { return lp_value(solve_conditional_lp(inst), "conditional LP"); }

double exact_off(const Instance& inst) {
  const Estimate e = expected_offline(inst);
  if (e.mode != EvalMode::Exact) throw std::runtime_error("offline optimum fell back to Monte-Carlo");
  return e.value;
}

double exact_worst(const ThresholdPolicyPlan& plan) {
  const Estimate e = exact_policy_value(plan, OrderRule::Worst);
  if (e.mode != EvalMode::Exact) throw std::runtime_error("policy value fell back to Monte-Carlo");
  return e.value;
}

void prop1i(Check& c, const ReproduceOptions& opt) {
  const std::vector<double> grid = opt.eps ? std::vector<double>{*opt.eps} : std::vector<double>{0.5, 0.25, 0.125};
  for (const double eps : grid) {
    const Instance inst = loose1_i(eps);
    const double ratio = exact_off(inst) / fluid(inst);
    c.expect(std::abs(ratio - eps) <= kSlack, "eps " + num(eps) + ": OFF/LP ratio " + num(ratio));
  }
}

void prop1ii(Check& c, const ReproduceOptions&) {
  for (const int n : {5, 10}) {
    const Instance inst = loose1_ii(n);
    const double off = exact_off(inst);
    const double a = off / fluid(inst);
    const double b = off / trunc(inst);
    c.expect(std::abs(a - 1.0 / n) <= kSlack, "n " + std::to_string(n) + ": OFF/LP " + num(a));
    c.expect(std::abs(b - 1.0) <= kSlack, "n " + std::to_string(n) + ": OFF/LP^trunc " + num(b));
  }
}

void lemma1(Check& c, const ReproduceOptions& opt) {
  Rng rng(opt.seed, 1);
  RandomIndepOptions o;
  o.max_capacity = 2;
  int bad = 0;
  double worst = 0.0;
  for (int k = 0; k < 500; ++k) {
    const Instance inst = random_indep_instance(rng, o);
    const double off = exact_off(inst);
    const double tr = trunc(inst);
    const double fl = fluid(inst);
    const double slack = std::min(tr - off, fl - tr);
    worst = std::min(worst, slack);
    if (slack < -kSlack) ++bad;
  }
  c.expect(bad == 0, "500 instances, OFF <= LP^trunc <= LP violated " + std::to_string(bad) +
                         " times, smallest slack " + num(worst, 12));
}

void typeround_goldens(Check& c, const ReproduceOptions&) {
  using R = Rational;
  const InstanceFile small = load_example("three-unit");
  const auto& d = small.exact_laws.front();
  const std::vector<R> x = *small.column;
  const auto plan = typeround<R>(x, d);
  const auto rd = plan.expand();
  const std::map<std::vector<int>, R> want{
      {{0, 1, 2}, R(5, 12)}, {{1, 0, 2}, R(5, 12)}, {{0, 2, 1}, R(1, 12)}, {{2, 0, 1}, R(1, 12)}};
  bool same = rd.branches.size() == want.size();
  for (const auto& b : rd.branches) {
    const auto it = want.find(b.routing.assignment);
    same = same && it != want.end() && it->second == b.probability;
  }
  std::string law;
  for (const auto& b : rd.branches) law += " " + format_routing(b.routing) + ":" + to_string(b.probability);
  c.expect(same, "3-resource example law" + law);
  const auto rep = verify_marginals(rd, x, d);
  std::string got;
  for (const auto& a : rep.achieved) got += " " + to_string(a);
  c.expect(rep.max_error == 0 && rep.achieved == x, "3-resource example marginals" + got);

  const InstanceFile five = load_example("five-unit");
  const auto p1 = typeround<R>(*five.column, five.exact_laws.front());
  const auto st = p1.project(p1.state_at(3).branches);
  const std::map<Routing, R> want1{{Routing{{2, 1, kIdle, 0, kIdle}}, R(2, 5)},
                                   {Routing{{2, kIdle, 1, 0, kIdle}}, R(2, 5)},
                                   {Routing{{kIdle, 2, 1, 0, kIdle}}, R(1, 10)},
                                   {Routing{{kIdle, 1, 2, 0, kIdle}}, R(1, 10)}};
  bool same1 = st.branches.size() == want1.size();
  std::string law1;
  for (const auto& b : st.branches) {
    const auto it = want1.find(b.routing);
    same1 = same1 && it != want1.end() && it->second == b.probability;
    law1 += " " + format_routing(b.routing) + ":" + to_string(b.probability);
  }
  c.expect(same1 && p1.real_segments(3) == 2, "5-resource example after 3 stages" + law1 + ", " +
                                                  std::to_string(p1.real_segments(3)) + " combined queries");
}

void typeround_props(Check& c, const ReproduceOptions& opt) {
  Rng rng(opt.seed, 5);
  int failures = 0;
  std::string first;
  for (int k = 0; k < 10000; ++k) {
    const RationalColumn col = random_feasible_column(rng, 8, 8);
    try {
      const auto plan = typeround<Rational>(col.x, col.law);
      for (int t = 0; t <= static_cast<int>(col.x.size()); ++t) {
        const auto rep = check_invariants(plan, t);
        if (!rep.ok) throw std::runtime_error(rep.failure);
      }
      const auto m = verify_marginals(plan.expand(), col.x, col.law);
      if (m.max_error != 0) throw std::runtime_error("marginals off by " + to_string(m.max_error));
    } catch (const std::exception& e) {
      if (failures++ == 0) first = e.what();
    }
  }
  c.expect(failures == 0, "10000 rational columns, " + std::to_string(failures) + " failures" +
                              (first.empty() ? "" : " (first: " + first + ")"));
}

void thm1(Check& c, const ReproduceOptions& opt) {
  Rng rng(opt.seed, 6);
  RandomIndepOptions o;
  o.max_resources = 3;
  o.max_types = 3;
  o.max_support = 3;
  o.max_capacity = 3;
  o.max_total_capacity = 3;
  int bad = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 200; ++k) {
    const Instance inst = random_indep_instance(rng, o);
    const auto plan = plan_threshold_policy(inst);
    const double lp = trunc(inst);
    const double v = exact_worst(*plan);
    if (v < lp / 2.0 - kSlack) ++bad;
    if (lp > 0.0) worst = std::min(worst, v / lp);
  }
  c.expect(bad == 0, "200 instances, worst-order value below LP^trunc/2 in " + std::to_string(bad) +
                         ", smallest ratio " + num(worst));
}

void prop2(Check& c, const ReproduceOptions&) {
  const double eps = 0.05;
  for (const int k1 : {1, 5}) {
    const Instance inst = main1tight(eps, k1);
    const double off = exact_off(inst);
    const double v = exact_worst(*plan_threshold_policy(inst));
    const std::string tag = "k1 " + std::to_string(k1) + ": ";
    c.expect(std::abs(off - (2.0 - eps) * k1) <= kSlack, tag + "OFF " + num(off));
    c.expect(v <= k1 + kSlack, tag + "policy value " + num(v) + ", ratio " + num(v / off));
  }
}

void lemma2(Check& c, const ReproduceOptions& opt) {
  Rng rng(opt.seed, 8);
  int bad = 0;
  double worst = 0.0;
  for (int k = 0; k < 500; ++k) {
    const Instance inst = random_horizon_instance(rng);
    const double gap = cond(inst) - optimal_online_dp(inst).value;
    worst = std::min(worst, gap);
    if (gap < -kSlack) ++bad;
  }
  c.expect(bad == 0, "500 instances, OPT > LP^cond in " + std::to_string(bad) + ", smallest slack " + num(worst, 12));
}

void thm2(Check& c, const ReproduceOptions& opt) {
  Rng rng(opt.seed, 9);
  int bad = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 200; ++k) {
    const Instance inst = random_horizon_instance(rng);
    const double lp = cond(inst);
    const double v = exact_policy_value(*build_horizon_policy(inst));
    if (v < lp / 2.0 - kSlack) ++bad;
    if (lp > 0.0) worst = std::min(worst, v / lp);
  }
  c.expect(bad == 0, "200 instances, value below LP^cond/2 in " + std::to_string(bad) + ", smallest ratio " + num(worst));
  for (const int cap : {2, 4}) {
    RandomHorizonOptions o;
    o.fixed_capacity = cap;
    const double bound = ocrs_bound(cap);
    int miss = 0;
    double low = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 100; ++k) {
      const Instance inst = random_horizon_instance(rng, o);
      const double lp = cond(inst);
      const double v = exact_policy_value(*build_horizon_policy(inst));
      if (v < bound * lp - kSlack) ++miss;
      if (lp > 0.0) low = std::min(low, v / lp);
    }
    c.expect(miss == 0, "k " + std::to_string(cap) + ": 100 instances below " + num(bound) + " x LP^cond in " +
                            std::to_string(miss) + ", smallest ratio " + num(low));
  }
}

void prop4(Check& c, const ReproduceOptions&) {
  const double eps = 0.1;
  std::vector<double> ratios;
  for (const int T : {4, 6, 8}) {
    const Instance inst = threshold_family(T, eps);
    const BestStatic best = best_static_threshold(inst);
    const double dp = optimal_online_dp(inst).value;
    ratios.push_back(best.value / dp);
    const std::string tag = "T " + std::to_string(T) + ": ";
    if (T == 6) {
      c.expect(best.value <= 4.0 + kSlack, tag + "best static value " + num(best.value));
      c.expect(dp >= 6.0 * std::pow(0.9, 6) - kSlack, tag + "DP value " + num(dp));
    } else {
      c.note("     " + tag + "best static " + num(best.value) + ", DP " + num(dp));
    }
  }
  c.expect(ratios[0] > ratios[1] && ratios[1] > ratios[2],
           "static/DP ratios " + num(ratios[0]) + " > " + num(ratios[1]) + " > " + num(ratios[2]));
}

void prop5(Check& c, const ReproduceOptions&) {
  std::vector<double> ratios;
  for (const int N : {5, 10, 20}) {
    const Instance inst = main2tight(N);
    const double lp = cond(inst);
    const double opt = optimal_online_dp(inst).value;
    ratios.push_back(opt / lp);
    const std::string tag = "N " + std::to_string(N) + ": ";
    const double n3 = std::pow(static_cast<double>(N), 3);
    c.expect(lp >= 2.0 - 1.0 / n3 - kSlack, tag + "LP^cond " + num(lp, 9));
    c.expect(opt >= 1.0 - kSlack && opt <= 1.0 + 3.0 / N + kSlack, tag + "OPT " + num(opt));
  }
  c.expect(ratios[0] > ratios[1] && ratios[1] > ratios[2],
           "OPT/LP^cond " + num(ratios[0]) + " > " + num(ratios[1]) + " > " + num(ratios[2]));
}

void separation(Check& c, const ReproduceOptions& opt) {
  Rng rng(opt.seed, 12);
  RandomIndepOptions o;
  o.max_resources = 12;
  o.max_types = 3;
  o.max_support = 6;
  o.max_capacity = 2;
  int mismatch = 0;
  int infeasible = 0;
  int bad_cut = 0;
  for (int k = 0; k < 200; ++k) {
    const Instance inst = random_indep_instance(rng, o);
    const Eigen::VectorXd x = random_candidate(rng, inst);
    const auto fast = separation_oracle(x, inst);
    const auto slow = exhaustive_separation(x, inst);
    if (fast.feasible != slow.feasible) ++mismatch;
    if (!fast.feasible) {
      ++infeasible;
      double lhs = 0.0;
      for (const int i : fast.cut.subset) lhs += x(x_index(i, fast.cut.type, inst.num_types()));
      if (!(lhs > fast.cut.rhs + 1e-9)) ++bad_cut;
    }
  }
  c.expect(mismatch == 0 && bad_cut == 0, "200 vectors (" + std::to_string(infeasible) + " infeasible), " +
                                              std::to_string(mismatch) + " verdict mismatches, " +
                                              std::to_string(bad_cut) + " cuts not violated");
}

struct Criterion {
  std::string id;
  std::string title;
  double limit;
  std::function<void(Check&, const ReproduceOptions&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"prop1i", "fluid LP gap OFF/LP = eps", 1, prop1i},
      {"prop1ii", "fluid LP gap 1/n, truncated LP tight", 1, prop1ii},
      {"lemma1", "OFF <= LP^trunc <= LP on random indep instances", 120, lemma1},
      {"typeround", "TypeRound golden laws", 1, typeround_goldens},
      {"typeround-props", "TypeRound invariants on random rational columns", 300, typeround_props},
      {"thm1", "threshold policy is 1/2-competitive against LP^trunc", 600, thm1},
      {"prop2", "no policy beats 1/(2-eps) on the two-type family", 60, prop2},
      {"lemma2", "OPT <= LP^cond on random horizons", 120, lemma2},
      {"thm2", "horizon policy is 1/2 and 1-1/sqrt(k+3) approximate", 600, thm2},
      {"prop4", "static thresholds lose to the DP", 60, prop4},
      {"prop5", "OPT/LP^cond falls toward 1/2", 120, prop5},
      {"separation", "knapsack separation matches subset enumeration", 60, separation},
  };
  return all;
}

template <class Body>
CheckResult timed(std::string id, std::string title, double limit, Body&& body) {
  CheckResult r;
  r.id = std::move(id);
  r.title = std::move(title);
  r.limit_seconds = limit;
  r.passed = true;
  Check c{r};
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("error: ") + e.what());
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (r.seconds > r.limit_seconds) c.expect(false, "took " + num(r.seconds, 2) + " s, limit " + num(limit, 0) + " s");
  return r;
}

}  // namespace

const std::vector<std::string>& criterion_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& c : criteria()) out.push_back(c.id);
    return out;
  }();
  return names;
}

CheckResult run_criterion(const std::string& id, const ReproduceOptions& opt) {
  for (const auto& c : criteria()) {
    if (c.id == id) return timed(c.id, c.title, c.limit, [&](Check& chk) { c.run(chk, opt); });
  }
  throw std::invalid_argument("unknown criterion '" + id + "'");
}

std::string format_result(const CheckResult& r) {
  std::ostringstream s;
  s << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(16) << r.id << r.title << " (" << std::fixed
    << std::setprecision(2) << r.seconds << " s)\n";
  for (const auto& d : r.detail) s << "    " << d << '\n';
  return s.str();
}

RationalColumn random_feasible_column(Rng& rng, int max_resources, int max_support) {
  using R = Rational;
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(hi - lo + 1))); };
  const int n = pick(1, max_resources);
  const int L = pick(1, max_support);
  std::vector<int> weights(static_cast<std::size_t>(L) + 1);
  int total = 0;
  for (int v = 0; v <= L; ++v) {
    weights[static_cast<std::size_t>(v)] = v == L ? pick(1, 4) : pick(0, 4);
    total += weights[static_cast<std::size_t>(v)];
  }
  std::vector<R> pmf;
  for (const int w : weights) pmf.emplace_back(w, total);
  RationalColumn out{DemandDistribution<R>(std::move(pmf)), std::vector<R>(static_cast<std::size_t>(n), R(0))};

  const int parts = pick(1, 3);
  std::vector<int> share(static_cast<std::size_t>(parts));
  int share_total = 0;
  for (auto& s : share) share_total += (s = pick(1, 5));
  for (const int s : share) {
    // A random partial injection of resources into ranks 1..L.
    std::vector<int> ranks(static_cast<std::size_t>(std::max(n, L)));
    for (std::size_t k = 0; k < ranks.size(); ++k) ranks[k] = static_cast<int>(k);
    for (std::size_t k = ranks.size(); k > 1; --k) std::swap(ranks[k - 1], ranks[rng.uniform_int(k)]);
    for (int i = 0; i < n; ++i) {
      const int k = ranks[static_cast<std::size_t>(i)];
      if (k < L && rng.bernoulli(0.85)) out.x[static_cast<std::size_t>(i)] += R(s, share_total) * out.law.survival(k + 1);
    }
  }
  static const R scales[] = {R(1), R(1), R(3, 4), R(1, 2)};
  const R scale = scales[rng.uniform_int(4)];
  for (auto& v : out.x) v *= scale;
  return out;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"typeround", "ocrs", "orderings", "separation", "expansion"};
  return names;
}

CheckResult run_suite(const std::string& name, std::uint64_t seed, int count) {
  if (count < 1) throw std::invalid_argument("count must be at least 1");
  const std::string cases = std::to_string(count) + " cases";
  if (name == "typeround") {
    return timed(name, "TypeRound invariants, rational columns", 1e9, [&](Check& c) {
      Rng rng(seed, 101);
      int bad = 0;
      for (int k = 0; k < count; ++k) {
        const auto col = random_feasible_column(rng, 8, 8);
        const auto plan = typeround<Rational>(col.x, col.law);
        for (int t = 0; t <= static_cast<int>(col.x.size()); ++t) bad += check_invariants(plan, t).ok ? 0 : 1;
        bad += verify_marginals(plan.expand(), col.x, col.law).max_error == 0 ? 0 : 1;
      }
      c.expect(bad == 0, cases + ", " + std::to_string(bad) + " violations");
    });
  }
  if (name == "ocrs") {
    return timed(name, "OCRS accepts every routed query w.p. gamma", 1e9, [&](Check& c) {
      Rng rng(seed, 102);
      int bad = 0;
      int below = 0;
      for (int k = 0; k < count; ++k) {
        const int cap = 1 + static_cast<int>(rng.uniform_int(4));
        const int T = 1 + static_cast<int>(rng.uniform_int(12));
        std::vector<double> rates(static_cast<std::size_t>(T));
        double sum = 0.0;
        for (auto& r : rates) sum += (r = rng.uniform());
        const double scale = std::min(1.0, cap * rng.uniform() / sum);
        for (auto& r : rates) r *= scale;
        const OcrsPlan plan = ocrs_plan(rates, cap);
        const auto acc = ocrs_acceptance(plan);
        for (int t = 0; t < T; ++t) {
          if (std::abs(acc[static_cast<std::size_t>(t)] - plan.gamma * rates[static_cast<std::size_t>(t)]) > 1e-9) ++bad;
        }
        if (!plan.meets_bound) ++below;
      }
      c.expect(bad == 0, cases + ", " + std::to_string(bad) + " steps off gamma * rate");
      c.expect(below == 0, cases + ", " + std::to_string(below) + " plans below 1 - 1/sqrt(k+3)");
    });
  }
  if (name == "orderings") {
    return timed(name, "OFF <= LP^trunc <= LP and OPT <= LP^cond", 1e9, [&](Check& c) {
      Rng rng(seed, 103);
      int bad = 0;
      for (int k = 0; k < count; ++k) {
        const Instance a = random_indep_instance(rng);
        const double tr = trunc(a);
        if (exact_off(a) > tr + kSlack || tr > fluid(a) + kSlack) ++bad;
        const Instance h = random_horizon_instance(rng);
        if (optimal_online_dp(h).value > cond(h) + kSlack) ++bad;
      }
      c.expect(bad == 0, cases + ", " + std::to_string(bad) + " violations");
    });
  }
  if (name == "separation") {
    return timed(name, "knapsack separation vs 2^n enumeration", 1e9, [&](Check& c) {
      Rng rng(seed, 104);
      RandomIndepOptions o;
      o.max_resources = 12;
      o.max_types = 3;
      o.max_support = 6;
      o.max_capacity = 2;
      int bad = 0;
      for (int k = 0; k < count; ++k) {
        const Instance inst = random_indep_instance(rng, o);
        const Eigen::VectorXd x = random_candidate(rng, inst);
        if (separation_oracle(x, inst).feasible != exhaustive_separation(x, inst).feasible) ++bad;
      }
      c.expect(bad == 0, cases + ", " + std::to_string(bad) + " mismatches");
    });
  }
  if (name == "expansion") {
    return timed(name, "unit-capacity expansion keeps LP and OFF values", 1e9, [&](Check& c) {
      Rng rng(seed, 105);
      RandomIndepOptions o;
      o.max_resources = 3;
      o.max_types = 3;
      o.max_support = 3;
      o.max_capacity = 3;
      int bad = 0;
      for (int k = 0; k < count; ++k) {
        const Instance inst = random_indep_instance(rng, o);
        const Instance unit = expand_unit_capacity(inst).instance;
        if (std::abs(fluid(inst) - fluid(unit)) > kSlack || std::abs(trunc(inst) - trunc(unit)) > kSlack ||
            std::abs(exact_off(inst) - exact_off(unit)) > kSlack) {
          ++bad;
        }
      }
      c.expect(bad == 0, cases + ", " + std::to_string(bad) + " mismatches");
    });
  }
  throw std::invalid_argument("unknown suite '" + name + "'");
}

std::vector<RatioEstimate> golden_report(std::uint64_t seed) {
  struct Row {
    const char* generator;
    const char* policy;
    const char* benchmark;
  };
  static const Row rows[] = {
      {"loose1_i:eps=1/2", "off", "fluid"},
      {"loose1_i:eps=1/4", "off", "fluid"},
      {"loose1_i:eps=1/8", "off", "fluid"},
      {"loose1_ii:n=5", "off", "fluid"},
      {"loose1_ii:n=5", "off", "trunc"},
      {"loose1_ii:n=10", "off", "fluid"},
      {"loose1_ii:n=10", "off", "trunc"},
      {"main1tight:eps=0.05,k1=1", "threshold", "off"},
      {"main1tight:eps=0.05,k1=5", "threshold", "off"},
      {"main1tight:eps=0.05,k1=5", "threshold", "trunc"},
      {"threshold_family:T=4,eps=0.1", "static-best", "opt"},
      {"threshold_family:T=6,eps=0.1", "static-best", "opt"},
      {"threshold_family:T=8,eps=0.1", "static-best", "opt"},
      {"threshold_family:T=6,eps=0.1", "opt", "cond"},
      {"main2tight:N=5", "opt", "cond"},
      {"main2tight:N=10", "opt", "cond"},
      {"main2tight:N=20", "opt", "cond"},
      {"main2tight:N=10", "horizon", "cond"},
  };
  std::vector<RatioEstimate> out;
  int id = 0;
  for (const auto& r : rows) {
    ExperimentConfig cfg;
    cfg.instance_id = "g" + std::to_string(++id);
    cfg.generator = parse_generator(r.generator);
    cfg.policy = r.policy;
    cfg.benchmark = r.benchmark;
    cfg.seed = seed;
    out.push_back(run_experiment(cfg));
  }
  return out;
}

}  // namespace stochmatch
