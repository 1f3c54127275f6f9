#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "r4surf/expr.hpp"
#include "r4surf/grid.hpp"
#include "r4surf/jet.hpp"

namespace r4surf {

/// Point-evaluable map from the (u, v) chart into R^4.
///
/// Used both for immersions and for vector fields along them. Maps with
/// analytic jets return exact Taylor data up to `analytic_order`; higher
/// orders (up to 2) fall back to finite differences of `value`.
class VecMap {
 public:
  using ValueFn = std::function<Vec4(const Vec2&)>;
  using JetFn = std::function<JetVec4(const Vec2&, int)>;

  VecMap() = default;
  VecMap(ValueFn value, JetFn jets, int analytic_order, Domain evaluable = Domain{});

  static VecMap from_jets(JetFn jets, int analytic_order, Domain evaluable = Domain{});
  static VecMap constant(const Vec4& v);

  Vec4 value(const Vec2& p) const;
  JetVec4 jets(const Vec2& p, int order, const FDConfig& fd = FDConfig{}) const;
  JetVec4 fd_jets(const Vec2& p, int order, const FDConfig& fd = FDConfig{}) const;

  int analytic_order() const { return analytic_order_; }
  const Domain& evaluable() const { return evaluable_; }
  /// Same map with analytic jets hidden, so every derivative is finite-differenced.
  VecMap fd_only() const;

  explicit operator bool() const { return static_cast<bool>(value_); }

 private:
  ValueFn value_;
  JetFn jets_;
  int analytic_order_ = 0;
  Domain evaluable_;
};

/// sum_k coeff_k * map_k. Terms with a zero coefficient are dropped, so the
/// result does not depend on them at all.
VecMap linear_combination(const std::vector<std::pair<double, VecMap>>& terms);

struct PlaneCurve {
  enum class Kind { kCircle, kEllipse, kExpression };
  Kind kind = Kind::kCircle;
  double r = 1.0;
  bool arc_length = false;
  double a = 1.0, b = 1.0;
  std::string x_src, y_src;  // parameter is named t
  Expr x, y;
  std::optional<std::pair<double, double>> param_range;

  static PlaneCurve circle(double r, bool arc_length = false);
  static PlaneCurve ellipse(double a, double b);
  static PlaneCurve expression(const std::string& x, const std::string& y);

  /// x(t), y(t) as jets in the chart variable the curve is attached to.
  std::pair<Jet2, Jet2> eval(const Jet2& t) const;
};

struct SurfaceSpec {
  enum class Kind { kProduct, kExpression, kSampled };
  Kind kind = Kind::kProduct;
  Domain domain;
  PlaneCurve curve1, curve2;
  std::array<std::string, 4> component_src;
  std::array<Expr, 4> components;
  // kSampled: node values on an nu x nv grid over `domain`, u fastest.
  int nu = 0, nv = 0;
  std::vector<Vec4> samples;

  static SurfaceSpec product(PlaneCurve c1, PlaneCurve c2, const Domain& d);
  static SurfaceSpec expression(const std::array<std::string, 4>& x, const Domain& d);
  static SurfaceSpec sampled(const Grid& grid, std::vector<Vec4> samples);

  std::string describe() const;
};

/// Parses the surface JSON schema (see README). Unknown fields are rejected.
/// Relative CSV paths resolve against `base_dir`.
SurfaceSpec surface_from_json(const nlohmann::json& j,
                              const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const SurfaceSpec& s);

/// Loads a mesh CSV (columns u,v,x1,x2,x3,x4[,...]) as a sampled surface.
SurfaceSpec load_mesh_csv(const std::filesystem::path& path);

/// The immersion as a point-evaluable map with jets.
VecMap make_surface(const SurfaceSpec& spec);

/// Jets of the four coordinates at `at`, checked against the domain.
/// Sampled surfaces support order <= 2 (finite differences of the interpolant).
JetVec4 eval_surface(const SurfaceSpec& spec, const Vec2& at, int order);

}  // namespace r4surf
