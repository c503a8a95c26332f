// Runs every acceptance criterion at its stated tolerance and time limit.
// One PASS/FAIL line per criterion; exits non-zero if any fails.

#include <cstdlib>
#include <iostream>
#include <string>

#include "stochmatch/reproduce.hpp"

int main(int argc, char** argv) {
  stochmatch::ReproduceOptions opt;
  if (const char* s = std::getenv("STOCHMATCH_SEED")) opt.seed = std::strtoull(s, nullptr, 10);
  int failed = 0;
  for (const auto& id : stochmatch::criterion_names()) {
    if (argc > 1 && id != argv[1]) continue;
    const auto r = stochmatch::run_criterion(id, opt);
    std::cout << stochmatch::format_result(r) << std::flush;
    failed += r.passed ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed\n" : std::to_string(failed) + " criteria failed\n");
  return failed == 0 ? 0 : 1;
}
