#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "milq/eval.hpp"

namespace milq {

/// Outcome of a nested cross-validation run. Holds no timestamps, so equal
/// inputs serialise to identical bytes.
struct EvaluationReport {
  int version = 1;
  std::string schema;
  std::uint64_t cohort_seed = 0;
  std::uint64_t cv_seed = 0;
  std::size_t subjects = 0;
  int outer_folds = 4;
  int inner_folds = 3;
  ParamGrid grid;
  std::vector<CvResult> results;
  std::size_t hygiene_checks = 0;
  std::vector<std::string> hygiene_violations;
};

nlohmann::json to_json(const EvaluationReport& r);
EvaluationReport report_from_json(const nlohmann::json& j);

/// Pretty-printed JSON text with a trailing newline.
std::string dump_report(const EvaluationReport& r);

nlohmann::json kernel_to_json(const Kernel& k);
Kernel kernel_from_json(const nlohmann::json& j);

}  // namespace milq
