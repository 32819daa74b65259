// The nine acceptance checks, shared by the acceptance binary and `knotcycle all`.

#pragma once

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace knotcycle::app {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0;
  double budget = 0;  // seconds
  nlohmann::json data;
};

struct AcceptanceOptions {
  int embed_samples = 1000;             // per chart, criterion 5
  long long mc_samples = 10'000'000;    // per chart, criterion 8
  double kappa = 50;
  std::uint64_t seed = 1;
};

/// Runs the selected criteria (all when empty) in order, calling on_result
/// after each one.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, const std::vector<int>& which,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "[PASS] 3 bracket complex soundness (12.1 s): ..."
std::string format_line(const CriterionResult& r);

nlohmann::json to_json(const CriterionResult& r);

}  // namespace knotcycle::app
