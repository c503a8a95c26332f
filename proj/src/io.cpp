#include "stochmatch/io.hpp"

#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <json.hpp>

namespace stochmatch {

namespace {

using json = nlohmann::json;

/// Input iterator that counts newlines as the parser consumes them.
struct LineCounter {
  int line = 1;
  char last = '\0';
  int token_line() const { return last == '\n' ? line - 1 : line; }
};

class CountingIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  CountingIterator() = default;
  CountingIterator(const char* p, LineCounter* c) : p_(p), counter_(c) {}
  reference operator*() const { return *p_; }
  CountingIterator& operator++() {
    counter_->last = *p_;
    if (*p_ == '\n') ++counter_->line;
    ++p_;
    return *this;
  }
  CountingIterator operator++(int) {
    auto copy = *this;
    ++*this;
    return copy;
  }
  bool operator==(const CountingIterator& o) const { return p_ == o.p_; }
  bool operator!=(const CountingIterator& o) const { return p_ != o.p_; }

 private:
  const char* p_ = nullptr;
  LineCounter* counter_ = nullptr;
};

/// Records the line of every value keyed by its JSON pointer.
class LineSax : public nlohmann::json_sax<json> {
 public:
  explicit LineSax(const LineCounter& c) : counter_(c) {}
  std::map<std::string, int> lines;

  bool null() override { return scalar(); }
  bool boolean(bool) override { return scalar(); }
  bool number_integer(number_integer_t) override { return scalar(); }
  bool number_unsigned(number_unsigned_t) override { return scalar(); }
  bool number_float(number_float_t, const string_t&) override { return scalar(); }
  bool string(string_t&) override { return scalar(); }
  bool binary(binary_t&) override { return scalar(); }
  bool start_object(std::size_t) override {
    place();
    frames_.push_back({false, {}, 0});
    return true;
  }
  bool key(string_t& k) override {
    frames_.back().key = k;
    return true;
  }
  bool end_object() override { return close(); }
  bool start_array(std::size_t) override {
    place();
    frames_.push_back({true, {}, 0});
    return true;
  }
  bool end_array() override { return close(); }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override { return false; }

 private:
  struct Frame {
    bool array;
    std::string key;
    std::size_t index;
  };

  std::string path() const {
    std::string p;
    for (const auto& f : frames_) p += "/" + (f.array ? std::to_string(f.index) : f.key);
    return p;
  }
  void place() { lines.emplace(path(), counter_.token_line()); }
  void done() {
    if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
  }
  bool scalar() {
    place();
    done();
    return true;
  }
  bool close() {
    frames_.pop_back();
    done();
    return true;
  }

  const LineCounter& counter_;
  std::vector<Frame> frames_;
};

/// A json node with its pointer, so every failure can name a line.
class Node {
 public:
  Node(const json& j, std::string path, const std::map<std::string, int>& lines)
      : j_(&j), path_(std::move(path)), lines_(&lines) {}

  int line() const {
    std::string p = path_;
    for (;;) {
      auto it = lines_->find(p);
      if (it != lines_->end()) return it->second;
      if (p.empty()) return 1;
      p = p.substr(0, p.rfind('/'));
    }
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw InstanceFormatError(line(), (path_.empty() ? std::string("document") : path_) + ": " + what);
  }
  const json& raw() const { return *j_; }
  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }
  Node at(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    if (!j_->contains(key)) fail("missing field '" + key + "'");
    return Node(j_->at(key), path_ + "/" + key, *lines_);
  }
  Node at(std::size_t i) const { return Node(j_->at(i), path_ + "/" + std::to_string(i), *lines_); }
  std::size_t array_size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }
  std::vector<std::pair<std::string, Node>> members() const {
    if (!j_->is_object()) fail("expected an object");
    std::vector<std::pair<std::string, Node>> out;
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      out.emplace_back(it.key(), Node(it.value(), path_ + "/" + it.key(), *lines_));
    }
    return out;
  }
  std::string text() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }
  int integer() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<int>();
  }
  double real() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }
  /// Number or decimal/fraction string.
  Rational rational() const {
    try {
      if (j_->is_string()) return parse_rational(j_->get<std::string>());
      if (j_->is_number()) return parse_rational(j_->dump());
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    fail("expected a probability (number or string such as \"3/4\")");
  }
  Rational probability() const {
    const Rational v = rational();
    if (v < 0 || v > 1) fail("probability " + to_string(v) + " outside [0, 1]");
    return v;
  }

 private:
  const json* j_;
  std::string path_;
  const std::map<std::string, int>* lines_;
};

DemandDistribution<Rational> read_law(const Node& node) {
  if (node.has("poisson")) {
    const Node p = node.at("poisson");
    try {
      const Distribution d = truncated_poisson(p.at("rate").real(), p.has("cutoff") ? p.at("cutoff").real() : 1e-9);
      std::vector<Rational> pmf;
      for (double v : d.pmf_vector()) pmf.emplace_back(v);
      // Renormalize exactly; the double pmf only sums to one within round-off.
      Rational total(0);
      for (const auto& v : pmf) total += v;
      for (auto& v : pmf) v /= total;
      return DemandDistribution<Rational>(std::move(pmf));
    } catch (const std::invalid_argument& e) {
      p.fail(e.what());
    }
  }
  const Node pmf = node.at("pmf");
  std::map<int, Rational> entries;
  if (pmf.raw().is_array()) {
    for (std::size_t v = 0; v < pmf.array_size(); ++v) entries[static_cast<int>(v)] = pmf.at(v).probability();
  } else {
    for (const auto& [key, value] : pmf.members()) {
      int v = -1;
      try {
        std::size_t used = 0;
        v = std::stoi(key, &used);
        if (used != key.size()) v = -1;
      } catch (const std::exception&) {
      }
      if (v < 0) value.fail("demand values must be nonnegative integers, got '" + key + "'");
      entries[v] += value.probability();
    }
  }
  Rational total(0);
  for (const auto& [v, p] : entries) total += p;
  // Decimal text rarely sums to one exactly; accept the usual 1e-12 slack
  // and rescale so the exact law is a distribution.
  if (total > 0 && abs_value(Rational(total - 1)) <= Rational(1, 1'000'000'000'000)) {
    for (auto& [v, p] : entries) p /= total;
  }
  try {
    return DemandDistribution<Rational>::from_map(entries);
  } catch (const std::invalid_argument& e) {
    pmf.fail(e.what());
  }
}

Distribution to_double_law(const DemandDistribution<Rational>& law) { return law.cast<double>(); }

}  // namespace

InstanceFile parse_instance(std::string_view text) {
  const std::string buffer(text);
  json doc;
  try {
    doc = json::parse(buffer);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, buffer.size());
    const int line = 1 + static_cast<int>(std::count(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    std::string msg = e.what();
    const auto colon = msg.find(": ");
    throw InstanceFormatError(line, colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  LineCounter counter;
  LineSax sax(counter);
  json::sax_parse(CountingIterator(buffer.data(), &counter), CountingIterator(buffer.data() + buffer.size(), &counter),
                  &sax);
  const Node root(doc, "", sax.lines);
  if (!doc.is_object()) root.fail("expected an object");

  InstanceFile out;
  if (root.has("name")) out.name = root.at("name").text();
  Instance& inst = out.instance;

  const Node caps = root.at("capacities");
  const std::size_t n = caps.array_size();
  if (n == 0) caps.fail("need at least one resource");
  for (std::size_t i = 0; i < n; ++i) {
    const int k = caps.at(i).integer();
    if (k < 1) caps.at(i).fail("capacity must be at least 1");
    inst.capacities.push_back(k);
  }

  const Node rewards = root.at("rewards");
  if (rewards.array_size() != n) {
    rewards.fail("expected " + std::to_string(n) + " rows (one per resource), got " +
                 std::to_string(rewards.array_size()));
  }
  const std::size_t m = rewards.at(std::size_t{0}).array_size();
  if (m == 0) rewards.fail("need at least one type");
  inst.rewards.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i) {
    const Node row = rewards.at(i);
    if (row.array_size() != m) row.fail("expected " + std::to_string(m) + " rewards");
    for (std::size_t j = 0; j < m; ++j) {
      const double r = row.at(j).real();
      if (!(r >= 0.0) || !std::isfinite(r)) row.at(j).fail("reward must be finite and nonnegative");
      inst.rewards(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r;
    }
  }

  if (root.has("arrival")) {
    const Node a = root.at("arrival");
    const std::string s = a.text();
    if (s == "adversarial") {
      inst.arrival = ArrivalPattern::Adversarial;
    } else if (s == "random") {
      inst.arrival = ArrivalPattern::RandomOrder;
    } else {
      a.fail("arrival must be \"adversarial\" or \"random\", got \"" + s + "\"");
    }
  }

  const Node demand = root.at("demand");
  const Node kind = demand.at("kind");
  const std::string k = kind.text();
  if (k == "indep") {
    const Node types = demand.at("types");
    if (types.array_size() != m) types.fail("expected " + std::to_string(m) + " laws (one per type)");
    IndepDemandModel model;
    for (std::size_t j = 0; j < m; ++j) {
      out.exact_laws.push_back(read_law(types.at(j)));
      model.per_type.push_back(to_double_law(out.exact_laws.back()));
    }
    inst.demand = std::move(model);
  } else if (k == "correl") {
    CorrelDemandModel model;
    model.total = to_double_law(read_law(demand.at("total")));
    const Node probs = demand.at("type_probs");
    if (probs.array_size() != m) probs.fail("expected " + std::to_string(m) + " type probabilities");
    Rational sum(0);
    for (std::size_t j = 0; j < m; ++j) {
      const Rational p = probs.at(j).probability();
      sum += p;
      model.type_probs.push_back(to_double(p));
    }
    if (abs_value(Rational(sum - 1)) > Rational(1, 1'000'000'000'000)) {
      probs.fail("type probabilities sum to " + to_string(sum) + ", expected 1");
    }
    inst.demand = std::move(model);
  } else if (k == "horizon") {
    StochasticHorizonModel model;
    model.total = to_double_law(read_law(demand.at("total")));
    const int T = model.total.max_support();
    const Node probs = demand.at("probs");
    if (static_cast<int>(probs.array_size()) != T) {
      probs.fail("expected " + std::to_string(T) + " rows (one per step up to the largest horizon)");
    }
    model.probs.resize(T, static_cast<Eigen::Index>(m));
    for (int t = 0; t < T; ++t) {
      const Node row = probs.at(static_cast<std::size_t>(t));
      if (row.array_size() != m) row.fail("expected " + std::to_string(m) + " type probabilities");
      Rational sum(0);
      for (std::size_t j = 0; j < m; ++j) {
        const Rational p = row.at(j).probability();
        sum += p;
        model.probs(t, static_cast<Eigen::Index>(j)) = to_double(p);
      }
      if (sum > Rational(1) + Rational(1, 1'000'000'000'000)) row.fail("row sums to " + to_string(sum) + " > 1");
    }
    inst.demand = std::move(model);
  } else {
    kind.fail("kind must be \"indep\", \"correl\" or \"horizon\", got \"" + k + "\"");
  }

  if (root.has("column")) {
    const Node col = root.at("column");
    if (col.array_size() != n) col.fail("expected " + std::to_string(n) + " entries (one per resource)");
    std::vector<Rational> x;
    for (std::size_t i = 0; i < n; ++i) {
      const Rational v = col.at(i).rational();
      if (v < 0) col.at(i).fail("column entries must be nonnegative");
      x.push_back(v);
    }
    if (m != 1 || !is_indep(inst)) col.fail("a column needs a single-type indep instance");
    out.column = std::move(x);
  }

  try {
    validate(inst);
  } catch (const std::invalid_argument& e) {
    demand.fail(e.what());
  }
  return out;
}

InstanceFile load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return parse_instance(s.str());
}

std::string to_json(const Instance& inst, const std::string& name) {
  json j;
  if (!name.empty()) j["name"] = name;
  j["capacities"] = inst.capacities;
  json rewards = json::array();
  for (int i = 0; i < inst.num_resources(); ++i) {
    json row = json::array();
    for (int t = 0; t < inst.num_types(); ++t) row.push_back(inst.rewards(i, t));
    rewards.push_back(row);
  }
  j["rewards"] = rewards;
  j["arrival"] = inst.arrival == ArrivalPattern::Adversarial ? "adversarial" : "random";
  auto law = [](const Distribution& d) { return json{{"pmf", d.pmf_vector()}}; };
  std::visit(
      [&](const auto& model) {
        using M = std::decay_t<decltype(model)>;
        json d;
        if constexpr (std::is_same_v<M, IndepDemandModel>) {
          d["kind"] = "indep";
          d["types"] = json::array();
          for (const auto& t : model.per_type) d["types"].push_back(law(t));
        } else if constexpr (std::is_same_v<M, CorrelDemandModel>) {
          d["kind"] = "correl";
          d["total"] = law(model.total);
          d["type_probs"] = model.type_probs;
        } else {
          d["kind"] = "horizon";
          d["total"] = law(model.total);
          d["probs"] = json::array();
          for (Eigen::Index t = 0; t < model.probs.rows(); ++t) {
            json row = json::array();
            for (Eigen::Index c = 0; c < model.probs.cols(); ++c) row.push_back(model.probs(t, c));
            d["probs"].push_back(row);
          }
        }
        j["demand"] = d;
      },
      inst.demand);
  return j.dump(2) + "\n";
}

namespace {

constexpr std::string_view kThreeUnit = R"({
  "name": "three-unit",
  "capacities": [1, 1, 1],
  "rewards": [[1], [1], [1]],
  "arrival": "adversarial",
  "demand": {
    "kind": "indep",
    "types": [{"pmf": {"1": "1/2", "2": "1/4", "3": "1/4"}}]
  },
  "column": ["3/4", "2/3", "1/3"]
}
)";

constexpr std::string_view kFiveUnit = R"({
  "name": "five-unit",
  "capacities": [1, 1, 1, 1, 1],
  "rewards": [[1], [1], [1], [1], [1]],
  "arrival": "adversarial",
  "demand": {
    "kind": "indep",
    "types": [{"pmf": {"1": "1/2", "2": "1/4", "3": "1/8", "4": "1/16", "5": "1/16"}}]
  },
  "column": ["1/8", "3/8", "7/8", "1/4", "0"]
}
)";

}  // namespace

const std::vector<std::string>& example_names() {
  static const std::vector<std::string> names{"three-unit", "five-unit"};
  return names;
}

std::string_view example_text(const std::string& name) {
  if (name == "three-unit") return kThreeUnit;
  if (name == "five-unit") return kFiveUnit;
  throw std::invalid_argument("unknown example '" + name + "' (known: three-unit, five-unit)");
}

InstanceFile load_example(const std::string& name) { return parse_instance(example_text(name)); }

}  // namespace stochmatch
