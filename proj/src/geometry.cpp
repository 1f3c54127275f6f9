#include "r4surf/geometry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SVD>

namespace r4surf {

void Tolerances::validate() const {
  const std::pair<const char*, double> all[] = {
      {"frame_tol", frame_tol},           {"degeneracy_tol", degeneracy_tol},
      {"flatness_tol", flatness_tol},     {"fd_flatness_tol", fd_flatness_tol},
      {"rank_tol", rank_tol},             {"holonomy_tol", holonomy_tol}};
  for (const auto& [name, value] : all) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw ConfigError(std::string("tolerance ") + name + " must be positive");
    }
  }
}

RankInfo jacobian_rank(const Mat42& jac, double rank_tol) {
  Eigen::JacobiSVD<Mat42> svd(jac);
  const Vec2 s = svd.singularValues();
  RankInfo r;
  r.sigma_max = s(0);
  r.sigma_min = s(1);
  r.rank = (s(0) >= rank_tol) + (s(1) >= rank_tol);
  const double weakest = r.rank == 2 ? s(1) : s(0);
  r.marginal = r.rank > 0 && weakest < 100.0 * rank_tol;
  return r;
}

namespace {

Mat2 rotation(double a) {
  Mat2 r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

std::string point_text(const Vec2& p) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << p.x() << ", " << p.y() << ")";
  return os.str();
}

// Greedy completion of the tangent plane: at each step take the coordinate
// axis with the largest residual (lowest index on ties).
std::pair<Vec4, Vec4> seed_normals(const Vec4& t1, const Vec4& t2) {
  std::array<Vec4, 2> n;
  std::vector<Vec4> basis{t1, t2};
  for (int step = 0; step < 2; ++step) {
    double best = -1.0;
    Vec4 pick = Vec4::Zero();
    for (int k = 0; k < 4; ++k) {
      Vec4 r = Vec4::Unit(k);
      for (const Vec4& b : basis) r -= r.dot(b) * b;
      // second pass for orthogonality to rounding level
      for (const Vec4& b : basis) r -= r.dot(b) * b;
      if (r.norm() > best + 1e-14) {
        best = r.norm();
        pick = r;
      }
    }
    n[step] = pick / pick.norm();
    basis.push_back(n[step]);
  }
  Eigen::Matrix4d m;
  m << t1, t2, n[0], n[1];
  if (m.determinant() < 0) n[1] = -n[1];
  return {n[0], n[1]};
}

void set_frame_quantities(PointGeometry& pg) {
  // alpha(t_a, t_b) = sum F_ia F_jb alpha_ij
  const Mat2& F = pg.frame_chart;
  auto alpha_frame = [&](int a, int b) {
    const Vec4 v = F(0, a) * F(0, b) * pg.alpha_chart[0] +
                   (F(0, a) * F(1, b) + F(1, a) * F(0, b)) * pg.alpha_chart[1] +
                   F(1, a) * F(1, b) * pg.alpha_chart[2];
    return pg.normal_coords(v);
  };
  pg.t1 = pg.jacobian * F.col(0);
  pg.t2 = pg.jacobian * F.col(1);
  pg.alpha = {alpha_frame(0, 0), alpha_frame(1, 1), alpha_frame(0, 1)};
  pg.H = 0.5 * (pg.alpha[0] + pg.alpha[1]);
  pg.B = 0.5 * (pg.alpha[0] - pg.alpha[1]);
  pg.C = pg.alpha[2];
  pg.gauss_K = pg.alpha[0].dot(pg.alpha[1]) - pg.alpha[2].dot(pg.alpha[2]);
  pg.normal_K_indicator = pg.B.dot(rotate_j(pg.C));
}

}  // namespace

PointGeometry point_geometry(const JetVec4& x, const Vec2& at, const Tolerances& tol,
                             double gauge_rotation) {
  if (x[0].order() < 2) throw GeometryError("point geometry needs jets of order >= 2");
  PointGeometry pg;
  pg.at = at;
  pg.point = jet_value(x);
  const Vec4 xu = jet_derivative(x, 1, 0), xv = jet_derivative(x, 0, 1);
  pg.jacobian << xu, xv;
  if (jacobian_rank(pg.jacobian, tol.rank_tol).rank < 2) {
    throw GeometryError("not an immersion at point " + point_text(at));
  }
  pg.g << xu.dot(xu), xu.dot(xv), xv.dot(xu), xv.dot(xv);

  // Gram-Schmidt on (x_u, x_v), recorded in chart components.
  const double lu = xu.norm();
  const Vec4 e1 = xu / lu;
  const Vec4 w = xv - xv.dot(e1) * e1;
  const double lw = w.norm();
  Mat2 F;
  F << 1.0 / lu, -xv.dot(e1) / (lu * lw), 0.0, 1.0 / lw;
  F = F * rotation(gauge_rotation);
  pg.frame_chart = F;
  pg.t1 = pg.jacobian * F.col(0);
  pg.t2 = pg.jacobian * F.col(1);
  std::tie(pg.n1, pg.n2) = seed_normals(pg.t1, pg.t2);

  auto project = [&](const Vec4& v) { return Vec4(v.dot(pg.n1) * pg.n1 + v.dot(pg.n2) * pg.n2); };
  pg.alpha_chart = {project(jet_derivative(x, 2, 0)), project(jet_derivative(x, 1, 1)),
                    project(jet_derivative(x, 0, 2))};
  set_frame_quantities(pg);
  pg.frame_angle = gauge_rotation;

  const double bb = pg.B.squaredNorm(), cc = pg.C.squaredNorm();
  const double y = 2.0 * pg.B.dot(pg.C), xdiff = bb - cc;
  const double spread = std::hypot(y, xdiff);
  if (bb + cc < tol.degeneracy_tol * tol.degeneracy_tol ||
      spread <= tol.degeneracy_tol * (bb + cc)) {
    pg.alignment_skipped = true;
    return pg;
  }
  const double phi = 0.25 * std::atan2(y, xdiff);
  pg.frame_chart = F * rotation(phi);
  pg.frame_angle = gauge_rotation + phi;
  set_frame_quantities(pg);
  return pg;
}

PointGeometry point_geometry(const VecMap& x, const Vec2& at, const Tolerances& tol,
                             const FDConfig& fd) {
  return point_geometry(x.jets(at, 2, fd), at, tol);
}

PointGeometry point_geometry(const SurfaceSpec& spec, const Vec2& at, const Tolerances& tol) {
  return point_geometry(eval_surface(spec, at, 2), at, tol);
}

Vec2 eta_of_theta(const PointGeometry& pg, double theta) {
  return pg.H + pg.B * std::cos(2.0 * theta) + pg.C * std::sin(2.0 * theta);
}

const char* to_string(PointClass k) {
  switch (k) {
    case PointClass::kUmbilic: return "umbilic";
    case PointClass::kSemiumbilic: return "semiumbilic_regular";
    case PointClass::kInflection: return "inflection";
    case PointClass::kNondegenerate: return "nondegenerate";
  }
  return "?";
}

Classification classify(const PointGeometry& pg, const Tolerances& tol, bool fd_tier) {
  const double eps = fd_tier ? tol.fd_flatness_tol : tol.degeneracy_tol;
  Classification c;
  const double nb = pg.B.norm(), nc = pg.C.norm();
  if (nb < eps && nc < eps) {
    c.kind = PointClass::kUmbilic;
    c.ellipse_line_distance = pg.H.norm();
    return c;
  }
  if (nc < eps) {
    const Vec2 bhat = pg.B / nb;
    c.ellipse_line_distance = (pg.H - pg.H.dot(bhat) * bhat).norm();
    c.kind = c.ellipse_line_distance < eps * (1.0 + pg.H.norm()) ? PointClass::kInflection
                                                                  : PointClass::kSemiumbilic;
    c.asymptotic_angles = {pg.frame_angle, pg.frame_angle + M_PI / 2.0};
    return c;
  }
  c.kind = PointClass::kNondegenerate;
  return c;
}

double gauss_curvature(const PointGeometry& pg) {
  return pg.alpha[0].dot(pg.alpha[1]) - pg.alpha[2].dot(pg.alpha[2]);
}

double normal_degeneracy(const PointGeometry& pg) { return std::abs(pg.B.dot(rotate_j(pg.C))); }

GeometryField geometry_on_grid(const VecMap& x, const Grid& grid, const Tolerances& tol,
                               const FDConfig& fd) {
  GeometryField f;
  f.grid = grid;
  f.nodes.resize(grid.size());
  f.rank.resize(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    const Vec2 p = grid.node(k);
    const JetVec4 jx = x.jets(p, 2, fd);
    Mat42 jac;
    jac << jet_derivative(jx, 1, 0), jet_derivative(jx, 0, 1);
    f.rank[k] = jacobian_rank(jac, tol.rank_tol);
    if (f.rank[k].rank == 2) f.nodes[k] = point_geometry(jx, p, tol);
  }
  return f;
}

}  // namespace r4surf
