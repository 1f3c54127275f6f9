#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "r4surf/geometry.hpp"
#include "r4surf/lattice.hpp"

namespace r4surf {

enum class Bundle { kTangent, kNormal };
const char* to_string(Bundle b);

/// Node values of a section, with a validity mask.
struct SectionField {
  Bundle bundle = Bundle::kTangent;
  Grid grid;
  std::vector<Vec4> values;
  std::vector<std::uint8_t> valid;

  SectionField() = default;
  SectionField(Bundle b, const Grid& g)
      : bundle(b), grid(g), values(g.size(), Vec4::Zero()), valid(g.size(), 0) {}
  int count_valid() const;
};

/// c at one point by the two closed forms.
struct CValue {
  Vec4 jb;             // JB / (H . JB)
  Vec4 nearest_point;  // n / |n|^2, n the point of the ellipse line nearest the origin
  double relative_gap = 0.0;
};
/// Throws GeometryError unless the point is semiumbilic and not an inflection.
CValue compute_c(const PointGeometry& pg, const Classification& cl);

/// Jets of c solving c . x_u = c . x_v = 0, c . x_ij = g_ij in least squares;
/// the result has order x.order - 2.
JetVec4 c_jets(const JetVec4& x);

/// Which covariant equation a field satisfies along the surface.
enum class FieldEquation {
  kPosition,        // tangent e with D_X e = X + alpha(X, e)
  kTangentParallel, // D_X s = alpha(X, s)
  kNormalParallel,  // D_X s = -(shape operator of s) X
};
/// Taylor jets of such a field from its value, by differentiating the
/// equation; needs x of order `order` + 1.
JetVec4 field_jets(const JetVec4& x, const Vec4& value, int order, FieldEquation eq);

/// Parallel tangent frame and flat coordinates over a lattice.
struct FlatChart {
  int base_node = 0;
  Vec2 base_point = Vec2::Zero();
  std::vector<Vec4> E1, E2;
  std::vector<double> a, b;
  std::vector<std::uint8_t> valid;  // per lattice point
  double max_gauss = 0.0;
};

struct Holonomy {
  double max_defect = 0.0;
  int cells_checked = 0;
  int cells_masked = 0;
  Vec2 worst_cell = Vec2::Zero();
  /// Defect of the cell whose lower-left corner is the node; empty elsewhere.
  std::vector<std::optional<double>> cell_defect;
};
/// Loop transport of an orthonormal basis of the bundle around every cell.
Holonomy holonomy(const LatticeGeometry& g, Bundle bundle);

/// Sections and charts of one immersion, computed on demand and cached.
///
/// `base` is snapped to the nearest node where the immersion has rank 2;
/// e and k vanish there unless a seed is given.
class SurfaceContext {
 public:
  SurfaceContext(LatticeJets x, const Tolerances& tol, const Vec2& base,
                 std::optional<Vec4> e_seed = std::nullopt);
  SurfaceContext(const SurfaceContext&) = delete;
  SurfaceContext& operator=(const SurfaceContext&) = delete;
  ~SurfaceContext();

  const LatticeJets& x() const { return x_; }
  const Lattice& lattice() const { return x_.lat; }
  const Grid& grid() const { return x_.lat.grid; }
  const Tolerances& tol() const { return tol_; }
  const Vec2& base_request() const { return base_request_; }
  /// True when derivatives come from grid differences rather than jets.
  bool fd_tier() const { return x_.fd; }
  double degeneracy_tol() const { return fd_tier() ? tol_.fd_flatness_tol : tol_.degeneracy_tol; }
  double flatness_tol() const { return fd_tier() ? tol_.fd_flatness_tol : tol_.flatness_tol; }

  const std::vector<std::optional<PointGeometry>>& geometry();
  const std::vector<RankInfo>& rank();
  const std::vector<std::optional<Classification>>& classes();
  const LatticeGeometry& connection();
  int base_node();

  /// c at every lattice point where the point is semiumbilic and not an inflection.
  const LatticeJets& c();
  /// j by the component formula (stored) and by the gradient formula.
  const SectionField& j();
  const SectionField& j_gradient();
  /// Throws GeometryError when the tangent bundle is not flat.
  const FlatChart& chart();
  const LatticeJets& e();
  /// k = -(e of the envelope x - e), read back on this chart.
  const SectionField& k();
  /// The envelope used for k (available after k()).
  SurfaceContext* envelope() { return envelope_.get(); }
  /// Parallel section of the bundle seeded at the base node (seed is projected).
  SectionField parallel_field(Bundle bundle, const Vec4& seed);
  const Holonomy& holonomy_tangent();
  const Holonomy& holonomy_normal();

 private:
  LatticeJets x_;
  Tolerances tol_;
  Vec2 base_request_;
  std::optional<Vec4> e_seed_;
  std::optional<std::vector<std::optional<PointGeometry>>> geometry_;
  std::optional<std::vector<RankInfo>> rank_;
  std::optional<std::vector<std::optional<Classification>>> classes_;
  std::optional<LatticeGeometry> connection_;
  std::optional<int> base_node_;
  std::optional<LatticeJets> c_;
  std::optional<SectionField> j_, j_gradient_;
  std::optional<FlatChart> chart_;
  std::optional<LatticeJets> e_;
  std::optional<SectionField> k_;
  std::unique_ptr<SurfaceContext> envelope_;
  std::optional<Holonomy> hol_t_, hol_n_;
};

/// Fourth-order grid derivatives (d_u, d_v) of node values; empty where a
/// stencil would touch a masked node and no fallback fits.
std::vector<std::optional<std::array<Vec4, 2>>> node_gradient(
    const Grid& grid, const std::vector<Vec4>& values, const std::vector<std::uint8_t>& valid);

/// Per node, the largest normal component of D_u f, D_v f w.r.t. the surface.
/// Vanishes for parallel normal sections and for fields like k - e, c - j.
std::vector<std::optional<double>> normal_derivative_error(SurfaceContext& ctx,
                                                           const std::vector<Vec4>& values,
                                                           const std::vector<std::uint8_t>& valid);

/// Default number of lattice samples per grid edge (two RK4 steps).
constexpr int kDefaultSamplesPerEdge = 4;

}  // namespace r4surf
