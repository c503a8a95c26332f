#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stochmatch/demand.hpp"
#include "stochmatch/instance.hpp"
#include "stochmatch/numeric.hpp"

namespace stochmatch {

/// Loader failure; what() starts with "line N: ".
class InstanceFormatError : public std::runtime_error {
 public:
  InstanceFormatError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// An instance plus the exact text of its probabilities, kept so the
/// rounding can run over rationals.
struct InstanceFile {
  std::string name;
  Instance instance;
  /// Indep only: each type's pmf parsed exactly.
  std::vector<DemandDistribution<Rational>> exact_laws;
  /// Optional LP column (one entry per resource) to feed TypeRound.
  std::optional<std::vector<Rational>> column;
};

InstanceFile parse_instance(std::string_view text);
InstanceFile load_instance(const std::string& path);

std::string to_json(const Instance& inst, const std::string& name = "");

/// Built-in instances: "three-unit" and "five-unit".
const std::vector<std::string>& example_names();
std::string_view example_text(const std::string& name);
InstanceFile load_example(const std::string& name);

}  // namespace stochmatch
