// Full-size invariant suite. Prints one PASS/FAIL line per invariant and
// exits nonzero if any fails.
#include <iostream>

#include "zeroflow/suite.hpp"

int main() {
  zeroflow::SuiteOptions options;
  int failed = 0;
  const auto results = zeroflow::run_suite(options, [&](const zeroflow::CheckResult& r) {
    std::cout << zeroflow::format_result(r) << std::endl;
    failed += r.passed ? 0 : 1;
  });
  std::cout << results.size() - failed << "/" << results.size() << " invariants hold\n";
  return failed == 0 ? 0 : 1;
}
