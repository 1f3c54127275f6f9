#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "r4surf/grid.hpp"
#include "r4surf/jet.hpp"
#include "r4surf/surface.hpp"
#include "r4surf/types.hpp"

namespace r4surf {

struct Tolerances {
  double frame_tol = 1e-10;
  double degeneracy_tol = 1e-7;
  double flatness_tol = 1e-6;
  double fd_flatness_tol = 1e-4;
  double rank_tol = 1e-8;
  double holonomy_tol = 1e-8;

  /// Throws ConfigError unless every tolerance is positive and finite.
  void validate() const;
};

/// Rank of a 4x2 jacobian from its singular values.
struct RankInfo {
  int rank = 0;
  bool marginal = false;  // smallest nonzero-classified singular value below 100 * rank_tol
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};
RankInfo jacobian_rank(const Mat42& jac, double rank_tol);
/// Singular values below this count as zero: rank_tol for jets, and the
/// difference-noise floor 0.1 * fd_flatness_tol for grid-difference jacobians.
inline double rank_threshold(const Tolerances& tol, bool fd_tier) {
  return fd_tier ? std::max(tol.rank_tol, 0.1 * tol.fd_flatness_tol) : tol.rank_tol;
}

/// Frames and second-order invariants at one point of an immersion.
///
/// Normal-plane quantities (alpha, H, B, C) are coordinates in (n1, n2).
/// `frame_chart` holds the chart components of t1 and t2 as columns, so
/// t_k = jacobian * frame_chart.col(k).
struct PointGeometry {
  Vec2 at = Vec2::Zero();
  Vec4 point = Vec4::Zero();
  Vec4 t1 = Vec4::Zero(), t2 = Vec4::Zero(), n1 = Vec4::Zero(), n2 = Vec4::Zero();
  Mat2 g = Mat2::Zero();
  Mat42 jacobian = Mat42::Zero();
  Mat2 frame_chart = Mat2::Zero();
  std::array<Vec2, 3> alpha{Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};  // b1, b2, b3
  /// alpha(d_u, d_u), alpha(d_u, d_v), alpha(d_v, d_v) as ambient normal vectors.
  std::array<Vec4, 3> alpha_chart{Vec4::Zero(), Vec4::Zero(), Vec4::Zero()};
  Vec2 H = Vec2::Zero(), B = Vec2::Zero(), C = Vec2::Zero();
  double gauss_K = 0.0;
  double normal_K_indicator = 0.0;  // B . JC
  /// Angle of t1 measured from x_u, after alignment.
  double frame_angle = 0.0;
  /// The ellipse was too close to a circle (or a point) to pick axes; frame left unrotated.
  bool alignment_skipped = false;

  Vec4 normal(const Vec2& w) const { return w.x() * n1 + w.y() * n2; }
  Vec2 normal_coords(const Vec4& x) const { return Vec2(x.dot(n1), x.dot(n2)); }
  Vec4 tangent(const Vec2& w) const { return w.x() * t1 + w.y() * t2; }
  Vec2 tangent_coords(const Vec4& x) const { return Vec2(x.dot(t1), x.dot(t2)); }
  /// Inverse metric in the chart basis.
  Mat2 g_inv() const { return g.inverse(); }
};

/// J n1 = n2, J n2 = -n1.
inline Vec2 rotate_j(const Vec2& w) { return Vec2(-w.y(), w.x()); }

/// Geometry from jets of order >= 2 at `at`. `gauge_rotation` rotates the
/// initial Gram-Schmidt frame before alignment (used to test invariance).
PointGeometry point_geometry(const JetVec4& x, const Vec2& at, const Tolerances& tol,
                             double gauge_rotation = 0.0);
PointGeometry point_geometry(const VecMap& x, const Vec2& at, const Tolerances& tol,
                             const FDConfig& fd = FDConfig{});
PointGeometry point_geometry(const SurfaceSpec& spec, const Vec2& at, const Tolerances& tol);

Vec2 eta_of_theta(const PointGeometry& pg, double theta);

enum class PointClass { kUmbilic, kSemiumbilic, kInflection, kNondegenerate };
const char* to_string(PointClass k);

struct Classification {
  PointClass kind = PointClass::kNondegenerate;
  /// Asymptotic directions as angles from x_u (semiumbilic and inflection points).
  std::vector<double> asymptotic_angles;
  double ellipse_line_distance = 0.0;
  /// Umbilic points count as inflection for every construction that needs c.
  bool inflection_like() const {
    return kind == PointClass::kUmbilic || kind == PointClass::kInflection;
  }
};

/// Uses degeneracy_tol, or fd_flatness_tol when `fd_tier` is set.
Classification classify(const PointGeometry& pg, const Tolerances& tol, bool fd_tier = false);

double gauss_curvature(const PointGeometry& pg);
double normal_degeneracy(const PointGeometry& pg);

/// Point geometry over a grid; nodes where the map is not an immersion are empty.
struct GeometryField {
  Grid grid;
  std::vector<std::optional<PointGeometry>> nodes;
  std::vector<RankInfo> rank;

  const std::optional<PointGeometry>& at(int i, int j) const { return nodes[grid.index(i, j)]; }
};
GeometryField geometry_on_grid(const VecMap& x, const Grid& grid, const Tolerances& tol,
                               const FDConfig& fd = FDConfig{});

}  // namespace r4surf
