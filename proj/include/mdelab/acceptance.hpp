#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mdelab {

struct CriterionResult {
  std::string id;
  std::string title;
  bool passed = false;
  nlohmann::json measured;
  double seconds = 0.0;
  std::string detail;
};

struct BatteryConfig {
  int threads = 1;
  std::uint64_t seed = 1;
  // criterion ids to run; empty runs all
  std::vector<std::string> only;
};

// AC1 .. AC12 in order. Unknown ids in `only` throw InvalidArgument.
std::vector<std::string> criterion_ids();
std::vector<CriterionResult> run_acceptance(const BatteryConfig& cfg,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

nlohmann::json scoreboard(const std::vector<CriterionResult>& results);

}  // namespace mdelab
