#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "r4surf/verify.hpp"

namespace r4surf {

const char* version();

constexpr int kMinGridSide = 8;
constexpr int kMaxGridSide = 512;

/// One batch run, as read from a config document (schema in README).
struct RunConfig {
  SurfaceSpec surface;
  int nu = 64, nv = 64;
  /// Defaults to the lower-left corner of the surface domain.
  std::optional<Vec2> base_point;
  std::vector<TransformSpec> pipeline;
  Tolerances tol;
  std::map<std::string, double> check_tolerances;
  std::filesystem::path outputs = "out";
  bool emit_mesh = true, emit_diagnostics = true, emit_report = true;
  bool fail_on_inconclusive = false;

  Grid grid() const { return Grid(nu, nv, surface.domain); }
  Vec2 base() const;
  SuiteOptions suite_options() const;
};

/// Throws ConfigError. Relative paths resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
/// Throws IoError when unreadable, ConfigError when invalid.
RunConfig load_run_config(const std::filesystem::path& path);

/// "evolute", or {"kind": ..., parameters}.
TransformSpec transform_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TransformSpec& s);
/// Starts from `base` and applies the keys present in `j`.
Tolerances tolerances_from_json(const nlohmann::json& j, Tolerances base = {});
nlohmann::json to_json(const Tolerances& t);
/// Parses "NUxNV" (e.g. from the command line) and checks the bounds.
std::pair<int, int> parse_grid(const std::string& s);
void check_grid(int nu, int nv);

/// Samples the surface on the grid and builds its context.
std::unique_ptr<SurfaceContext> make_context(const SurfaceSpec& spec, const Grid& grid,
                                             const Tolerances& tol, const Vec2& base);
std::unique_ptr<SurfaceContext> make_context(const RunConfig& cfg);

/// u,v,x1,x2,x3,x4,rank. Masked nodes get nan coordinates and rank -1.
void write_mesh_csv(std::ostream& out, const Grid& grid, const std::vector<Vec4>& points,
                    const std::vector<int>& rank);
/// Stage 0 is the source; s >= 1 the image of stage s.
void write_mesh_csv(std::ostream& out, SurfaceContext& source, const SuiteResult& r, int stage);

/// u,v,class,gauss_K,normal_degeneracy,|c|,|e|,|j| and four masked flags.
void write_diag_csv(std::ostream& out, SurfaceContext& ctx);

/// {"header": {surface, grid, base_point, pipeline, tolerances, check_tolerances, version},
///  "checks": [...], "summary": {...}}
nlohmann::json report_json(const RunConfig& cfg, const Vec2& base, const SuiteResult& r);

/// Per-class and per-rank node counts plus bundle flatness.
nlohmann::json classify_summary(SurfaceContext& ctx);

/// "%.17g"; nan and inf spelled as such.
std::string format_double(double x);

}  // namespace r4surf
