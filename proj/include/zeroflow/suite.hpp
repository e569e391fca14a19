#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace zeroflow {

struct SuiteOptions {
  /// Reduced sizes; a smoke run, not the acceptance thresholds' workload.
  bool quick = false;
  /// Names to run; empty runs every invariant.
  std::vector<std::string> only;
  std::uint64_t seed = 2024;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  /// Wall-clock limit included in `passed`; 0 means none.
  double budget_seconds = 0.0;
};

/// Invariant names in execution order.
const std::vector<std::string>& suite_names();

/// Runs the selected invariants in order and calls `on_result` after each.
/// An exception inside a check is reported as a failure of that check.
std::vector<CheckResult> run_suite(const SuiteOptions& options,
                                   const std::function<void(const CheckResult&)>& on_result = {});

/// "PASS name  1.23 s  detail" (budget appended when set).
std::string format_result(const CheckResult& r);

}  // namespace zeroflow
