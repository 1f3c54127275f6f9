#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "r4surf/transforms.hpp"

namespace r4surf {

enum class CheckStatus { kPass, kFail, kInconclusive };
const char* to_string(CheckStatus s);

/// One named invariant evaluated over the grid nodes.
///
/// pass is max_error < tolerance. When more than half of the nodes are
/// masked the status is inconclusive whatever the error. For quantile checks
/// max_error is the q-quantile of the node errors and raw_max the true max.
struct CheckReport {
  std::string name;
  int stage = 0;  // 0: the input surface; s: image of pipeline stage s
  double max_error = 0.0;
  double raw_max = 0.0;
  double tolerance = 0.0;
  int nodes_checked = 0;
  int nodes_masked = 0;
  bool pass = true;
  CheckStatus status = CheckStatus::kInconclusive;
  Vec2 worst_node = Vec2::Zero();
  std::optional<double> quantile;
  std::string note;
};

/// Builds a report from per-node errors (nullopt = masked).
CheckReport summarize(const std::string& name, const Grid& grid,
                      const std::vector<std::optional<double>>& errors, double tolerance,
                      std::optional<double> quantile = std::nullopt);

nlohmann::json to_json(const CheckReport& r);

struct SuiteOptions {
  /// Per-check tolerance overrides, keyed by check name.
  std::map<std::string, double> check_tolerances;
  /// Quantile used by the image curvature checks.
  double image_quantile = 0.95;
};

struct SuiteResult {
  std::vector<CheckReport> reports;
  std::vector<Stage> stages;
  bool all_passed(bool inconclusive_fails = false) const;
};

/// Runs the pipeline on `source` and evaluates every applicable check, in a
/// fixed order. Throws ConfigError when a stage needs a flat or
/// semiumbilical source that it does not get.
SuiteResult run_suite(SurfaceContext& source, const std::vector<TransformSpec>& pipeline,
                      const SuiteOptions& opts = {});

/// Default tolerance of a named check for a given tier.
double default_tolerance(const std::string& name, const Tolerances& tol, bool fd_tier);

/// Every check name run_suite can emit.
const std::vector<std::string>& check_names();

/// Source-surface checks only (no pipeline).
std::vector<CheckReport> surface_checks(SurfaceContext& m, const SuiteOptions& opts = {});

}  // namespace r4surf
