#include <cmath>
#include <functional>

#include "doctest.h"
#include "r4surf/sections.hpp"

using namespace r4surf;

namespace {

const Tolerances kTol;

SurfaceSpec torus(const Domain& d) {
  return SurfaceSpec::product(PlaneCurve::circle(1.0, true), PlaneCurve::circle(1.0, true), d);
}

SurfaceSpec ellipses(const Domain& d) {
  return SurfaceSpec::product(PlaneCurve::ellipse(2, 1), PlaneCurve::ellipse(3, 1), d);
}

std::unique_ptr<SurfaceContext> context(const SurfaceSpec& spec, int n, const Vec2& base) {
  const Lattice lat(Grid(n, n, spec.domain), kDefaultSamplesPerEdge);
  return std::make_unique<SurfaceContext>(sample_map(make_surface(spec), lat, 4), kTol, base);
}

// Ellipse (a cos t, b sin t): speed, curvature, inward unit normal.
double speed(double a, double b, double t) { return std::hypot(a * std::sin(t), b * std::cos(t)); }
double kappa(double a, double b, double t) { return a * b / std::pow(speed(a, b, t), 3); }
Vec2 inward(double a, double b, double t) {
  return Vec2(-b * std::cos(t), -a * std::sin(t)) / speed(a, b, t);
}

// Composite Simpson on [t0, t1].
double simpson(const std::function<double(double)>& f, double t0, double t1, int n = 2000) {
  const double h = (t1 - t0) / n;
  double s = f(t0) + f(t1);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(t0 + k * h);
  return s * h / 3.0;
}

// Normal part (w.r.t. the surface at node k) of the grid derivative of a node field.
double normal_derivative_defect(SurfaceContext& ctx, const std::vector<Vec4>& f,
                                const std::vector<std::uint8_t>& ok, bool tangent) {
  const Grid& g = ctx.grid();
  const auto& geo = ctx.geometry();
  double worst = 0.0;
  for (int j = 0; j < g.nv; ++j) {
    for (int i = 0; i < g.nu; ++i) {
      const int k = g.index(i, j);
      if (!ok[k] || !geo[k]) continue;
      auto du = line_derivative<Vec4>(
          [&](int q) -> std::optional<Vec4> {
            return ok[g.index(q, j)] ? std::optional<Vec4>(f[g.index(q, j)]) : std::nullopt;
          },
          i, g.nu, g.hu());
      auto dv = line_derivative<Vec4>(
          [&](int q) -> std::optional<Vec4> {
            return ok[g.index(i, q)] ? std::optional<Vec4>(f[g.index(i, q)]) : std::nullopt;
          },
          j, g.nv, g.hv());
      if (!du || !dv) continue;
      const PointGeometry& pg = *geo[k];
      for (const Vec4& d : {*du, *dv}) {
        const double r = tangent ? pg.normal_coords(d).norm() : pg.tangent_coords(d).norm();
        worst = std::max(worst, r);
      }
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("c on the Clifford torus") {
  const auto spec = torus(Domain{-2, 2, -2, 2});
  for (double u : {0.0, 0.9, -1.7}) {
    for (double v : {0.3, -0.4}) {
      const auto pg = point_geometry(spec, Vec2(u, v), kTol);
      const auto c = compute_c(pg, classify(pg, kTol));
      const Vec4 expect(-std::cos(u), -std::sin(u), -std::cos(v), -std::sin(v));
      CHECK((c.jb - expect).norm() < 1e-13);
      CHECK((c.nearest_point - expect).norm() < 1e-13);
      CHECK(c.jb.squaredNorm() == doctest::Approx(2.0));
      const Vec4 cj = jet_value(c_jets(eval_surface(spec, Vec2(u, v), 2)));
      CHECK((cj - expect).norm() < 1e-13);
    }
  }
}

TEST_CASE("c on the ellipse product at the vertex") {
  const auto spec = ellipses(Domain{-1, 1, -1, 1});
  const auto pg = point_geometry(spec, Vec2(0, 0), kTol);
  const auto c = compute_c(pg, classify(pg, kTol));
  CHECK((c.jb - Vec4(-0.5, 0, -1.0 / 3.0, 0)).norm() < 1e-14);
  CHECK(c.relative_gap < 1e-9);
  CHECK(c.jb.dot(pg.normal(pg.alpha[0])) == doctest::Approx(1.0));
  CHECK(c.jb.dot(pg.normal(pg.alpha[1])) == doctest::Approx(1.0));
  // Curvatures 2 and 3 are the lengths of b1, b2 in some order.
  const double k1 = pg.alpha[0].norm(), k2 = pg.alpha[1].norm();
  CHECK(std::min(k1, k2) == doctest::Approx(2.0));
  CHECK(std::max(k1, k2) == doctest::Approx(3.0));
}

TEST_CASE("c is undefined on the plane") {
  const auto spec = SurfaceSpec::expression({"u", "v", "0", "0"}, Domain{-1, 1, -1, 1});
  const auto pg = point_geometry(spec, Vec2(0, 0), kTol);
  CHECK_THROWS_WITH_AS(compute_c(pg, classify(pg, kTol)),
                       doctest::Contains("c undefined"), GeometryError);
}

TEST_CASE("c jets match finite differences of c") {
  const auto spec = ellipses(Domain{-2, 2, -2, 2});
  const Vec2 p(0.4, -0.3);
  const auto cj = c_jets(eval_surface(spec, p, 4));
  REQUIRE(cj[0].order() == 2);
  const auto cval = [&](const Vec2& q) { return jet_value(c_jets(eval_surface(spec, q, 2))); };
  const auto fd = fd_jet4(cval, p, 2, FDConfig{1e-3, 2});
  for (int d = 0; d <= 2; ++d) {
    for (int j = 0; j <= d; ++j) {
      CHECK((jet_derivative(cj, d - j, j) - jet_derivative(fd, d - j, j)).norm() < 1e-7);
    }
  }
}

TEST_CASE("c alpha equals g on the lattice") {
  auto ctx = context(ellipses(Domain{1.7, 2.6, 1.7, 2.6}), 16, Vec2(1.7, 1.7));
  const auto& c = ctx->c();
  const auto& geo = ctx->geometry();
  int checked = 0;
  for (int k = 0; k < ctx->grid().size(); ++k) {
    REQUIRE(c.valid[k]);
    const PointGeometry& pg = *geo[k];
    const Vec4 cv = c.value(k);
    CHECK(std::abs(cv.dot(pg.alpha_chart[0]) - pg.g(0, 0)) < 1e-10);
    CHECK(std::abs(cv.dot(pg.alpha_chart[1]) - pg.g(0, 1)) < 1e-10);
    CHECK(std::abs(cv.dot(pg.alpha_chart[2]) - pg.g(1, 1)) < 1e-10);
    CHECK(pg.tangent_coords(cv).norm() < 1e-10);
    ++checked;
  }
  CHECK(checked == 256);
}

TEST_CASE("j vanishes on the torus and matches the curvature oracle on ellipses") {
  auto t = context(torus(Domain{0, 1.2, 0, 1.2}), 12, Vec2(0, 0));
  for (int k = 0; k < t->grid().size(); ++k) {
    REQUIRE(t->j().valid[k]);
    CHECK(t->j().values[k].norm() < 1e-10);
    CHECK(t->j_gradient().values[k].norm() < 1e-10);
  }

  auto e = context(ellipses(Domain{1.7, 2.6, 1.7, 2.6}), 12, Vec2(1.7, 1.7));
  // c.c = kappa1^-2 + kappa2^-2; j = sum_i (1/2) d_i(kappa_i^-2) / |x_i|^2 x_i.
  auto dk2 = [](double a, double b, double t) {
    const double q = a * a * std::sin(t) * std::sin(t) + b * b * std::cos(t) * std::cos(t);
    return 3.0 * q * q * 2.0 * (a * a - b * b) * std::sin(t) * std::cos(t) / (a * a * b * b);
  };
  for (int k = 0; k < e->grid().size(); ++k) {
    const Vec2 p = e->grid().node(k);
    const double u = p.x(), v = p.y();
    const Vec4 xu(-2 * std::sin(u), std::cos(u), 0, 0), xv(0, 0, -3 * std::sin(v), std::cos(v));
    const Vec4 expect = 0.5 * dk2(2, 1, u) / xu.squaredNorm() * xu +
                        0.5 * dk2(3, 1, v) / xv.squaredNorm() * xv;
    REQUIRE(e->j().valid[k]);
    CHECK((e->j().values[k] - expect).norm() < 1e-9);
    CHECK((e->j_gradient().values[k] - expect).norm() < 1e-9);
  }
  // At the ellipse vertices both curvatures are extremal, so j = 0.
  auto z = context(ellipses(Domain{-0.5, 0.5, -0.5, 0.5}), 9, Vec2(0, 0));
  CHECK(z->j().values[z->grid().index(4, 4)].norm() < 1e-12);
}

TEST_CASE("flat chart of the plane and the torus") {
  auto plane = context(SurfaceSpec::expression({"u", "v", "0", "0"}, Domain{0, 1, 0, 1}), 9,
                       Vec2(0, 0));
  const auto& pc = plane->chart();
  for (int k = 0; k < plane->lattice().size(); ++k) {
    REQUIRE(pc.valid[k]);
    const Vec2 p = plane->lattice().point(k);
    CHECK((pc.E1[k] - Vec4(1, 0, 0, 0)).norm() == 0.0);
    CHECK((pc.E2[k] - Vec4(0, 1, 0, 0)).norm() == 0.0);
    CHECK(std::abs(pc.a[k] - p.x()) < 1e-15);
    CHECK(std::abs(pc.b[k] - p.y()) < 1e-15);
    CHECK((plane->e().value(k) - Vec4(p.x(), p.y(), 0, 0)).norm() < 1e-15);
  }

  auto t = context(torus(Domain{0, 1.2, 0, 1.2}), 64, Vec2(0, 0));
  const auto& tc = t->chart();
  for (int k = 0; k < t->lattice().size(); ++k) {
    REQUIRE(tc.valid[k]);
    const Vec2 p = t->lattice().point(k);
    CHECK(std::abs(tc.a[k] - p.x()) < 1e-9);
    CHECK(std::abs(tc.b[k] - p.y()) < 1e-9);
    const Vec4 t1(-std::sin(p.x()), std::cos(p.x()), 0, 0), t2(0, 0, -std::sin(p.y()), std::cos(p.y()));
    CHECK((t->e().value(k) - (p.x() * t1 + p.y() * t2)).norm() < 1e-9);
  }
  CHECK(t->holonomy_tangent().max_defect < 1e-10);
  CHECK(t->holonomy_normal().max_defect < 1e-10);
}

TEST_CASE("flat coordinates of the ellipse product are arc lengths") {
  const Domain d{1.7, 2.6, 1.7, 2.6};
  auto ctx = context(ellipses(d), 24, Vec2(1.7, 1.7));
  const auto& fc = ctx->chart();
  for (int k = 0; k < ctx->grid().size(); ++k) {
    REQUIRE(fc.valid[k]);
    const Vec2 p = ctx->grid().node(k);
    const double s1 = simpson([](double t) { return speed(2, 1, t); }, d.u_min, p.x());
    const double s2 = simpson([](double t) { return speed(3, 1, t); }, d.v_min, p.y());
    CHECK(std::abs(fc.a[k] - s1) < 1e-8);
    CHECK(std::abs(fc.b[k] - s2) < 1e-8);
  }
  CHECK(ctx->holonomy_tangent().max_defect < 1e-8);
  CHECK(ctx->holonomy_normal().max_defect < 1e-8);
}

TEST_CASE("e satisfies its defining equation") {
  auto ctx = context(ellipses(Domain{1.7, 2.6, 1.7, 2.6}), 32, Vec2(1.7, 1.7));
  const auto& e = ctx->e();
  const auto& geo = ctx->geometry();
  const Grid& g = ctx->grid();
  CHECK(e.value(ctx->base_node()).norm() == 0.0);
  double worst = 0.0, worst_jet = 0.0;
  for (int j = 0; j < g.nv; ++j) {
    for (int i = 0; i < g.nu; ++i) {
      const int k = g.index(i, j);
      const auto du = line_derivative<Vec4>(
          [&](int q) { return std::optional<Vec4>(e.value(g.index(q, j))); }, i, g.nu, g.hu());
      const auto dv = line_derivative<Vec4>(
          [&](int q) { return std::optional<Vec4>(e.value(g.index(i, q))); }, j, g.nv, g.hv());
      const PointGeometry& pg = *geo[k];
      // Tangent part of D_i e minus x_i.
      const Vec4 ru = du->dot(pg.t1) * pg.t1 + du->dot(pg.t2) * pg.t2 - pg.jacobian.col(0);
      const Vec4 rv = dv->dot(pg.t1) * pg.t1 + dv->dot(pg.t2) * pg.t2 - pg.jacobian.col(1);
      worst = std::max({worst, ru.norm(), rv.norm()});
      const Vec4 ju = jet_derivative(e.jets[k], 1, 0), jv = jet_derivative(e.jets[k], 0, 1);
      const Vec4 su = ju.dot(pg.t1) * pg.t1 + ju.dot(pg.t2) * pg.t2 - pg.jacobian.col(0);
      const Vec4 sv = jv.dot(pg.t1) * pg.t1 + jv.dot(pg.t2) * pg.t2 - pg.jacobian.col(1);
      worst_jet = std::max({worst_jet, su.norm(), sv.norm()});
      // The jets carry the same derivative.
      CHECK((jet_derivative(e.jets[k], 1, 0) - *du).norm() < 1e-4);
    }
  }
  CHECK(worst < 2e-4);
  CHECK(worst_jet < 1e-9);
}

TEST_CASE("k: defining equation and per-factor oracle") {
  const Domain d{1.7, 2.6, 1.7, 2.6};
  auto ctx = context(ellipses(d), 64, Vec2(1.7, 1.7));
  const auto& k = ctx->k();
  const Grid& g = ctx->grid();
  // The envelope degenerates on the base row and column.
  for (int q = 0; q < g.nu; ++q) {
    CHECK_FALSE(k.valid[g.index(q, 0)]);
    CHECK_FALSE(k.valid[g.index(0, q)]);
  }
  CHECK(k.count_valid() == (g.nu - 1) * (g.nv - 1));

  // (D_X (k - e)) normal part vanishes.
  std::vector<Vec4> diff(g.size());
  for (int q = 0; q < g.size(); ++q) diff[q] = k.values[q] - ctx->e().value(q);
  CHECK(normal_derivative_defect(*ctx, diff, k.valid, true) < 2e-5);

  // Gauge: adding a parallel normal section keeps the defect.
  const auto z = ctx->parallel_field(Bundle::kNormal, Vec4(0.3, 0.1, -0.2, 0.5));
  std::vector<Vec4> shifted(g.size());
  for (int q = 0; q < g.size(); ++q) shifted[q] = diff[q] + z.values[q];
  CHECK(std::abs(normal_derivative_defect(*ctx, shifted, k.valid, true) -
                 normal_derivative_defect(*ctx, diff, k.valid, true)) < 1e-5);

  // k . N1 changes along u by the integral of (s - s0) kappa ds.
  const int ref = g.index(1, 1);
  const double u_ref = g.node(ref).x();
  auto s_of = [&](double t) { return simpson([](double r) { return speed(2, 1, r); }, d.u_min, t); };
  for (int i = 1; i < g.nu; ++i) {
    const int node = g.index(i, 1);
    const double u = g.node(node).x();
    const double expect = simpson(
        [&](double t) { return s_of(t) * kappa(2, 1, t) * speed(2, 1, t); }, u_ref, u, 200);
    auto k1 = [&](int n) {
      const Vec2 nn = inward(2, 1, g.node(n).x());
      return k.values[n].dot(Vec4(nn.x(), nn.y(), 0, 0));
    };
    CHECK(std::abs((k1(node) - k1(ref)) - expect) < 1e-6);
  }
}

TEST_CASE("Clifford torus: k lives off the axes") {
  auto ctx = context(torus(Domain{0, 1.2, 0, 1.2}), 33, Vec2(0, 0));
  const auto& k = ctx->k();
  const Grid& g = ctx->grid();
  CHECK_FALSE(k.valid[g.index(0, 9)]);
  CHECK_FALSE(k.valid[g.index(9, 0)]);
  CHECK(k.valid[g.index(9, 9)]);
  std::vector<Vec4> diff(g.size());
  for (int q = 0; q < g.size(); ++q) diff[q] = k.values[q] - ctx->e().value(q);
  CHECK(normal_derivative_defect(*ctx, diff, k.valid, true) < 1e-5);
}

TEST_CASE("parallel fields") {
  auto plane = context(SurfaceSpec::expression({"u", "v", "0", "0"}, Domain{0, 1, 0, 1}), 9,
                       Vec2(0, 0));
  const auto f = plane->parallel_field(Bundle::kTangent, Vec4(1, 0, 0, 0));
  for (int k = 0; k < plane->grid().size(); ++k) CHECK((f.values[k] - Vec4(1, 0, 0, 0)).norm() == 0.0);

  auto t = context(torus(Domain{0, 1.2, 0, 1.2}), 64, Vec2(0, 0));
  const auto& geo = t->geometry();
  const Vec4 n1 = geo[t->base_node()]->n1;
  const auto z = t->parallel_field(Bundle::kNormal, n1);
  for (int k = 0; k < t->grid().size(); ++k) {
    REQUIRE(z.valid[k]);
    CHECK(z.values[k].norm() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(geo[k]->tangent_coords(z.values[k]).norm() < 1e-10);
  }
  CHECK(normal_derivative_defect(*t, z.values, z.valid, true) < 1e-8);

  const auto w = t->parallel_field(Bundle::kTangent, Vec4(0, 0.6, 0, 0.8));
  for (int k = 0; k < t->grid().size(); ++k) {
    const Vec2 p = t->grid().node(k);
    const Vec4 t1(-std::sin(p.x()), std::cos(p.x()), 0, 0), t2(0, 0, -std::sin(p.y()), std::cos(p.y()));
    CHECK(w.values[k].dot(t1) == doctest::Approx(0.6).epsilon(1e-10));
    CHECK(w.values[k].dot(t2) == doctest::Approx(0.8).epsilon(1e-10));
  }
}

TEST_CASE("non-flat surfaces have no flat chart") {
  auto s = context(SurfaceSpec::expression({"u", "v", "u^2 - v^2", "2*u*v"}, Domain{-1, 1, -1, 1}),
                   9, Vec2(0, 0));
  CHECK_THROWS_WITH_AS(s->chart(), doctest::Contains("tangent bundle not flat"), GeometryError);
}

TEST_CASE("property: jets of field equations agree with the lattice values") {
  // Field jets evaluated from a node predict the next lattice point to O(h^3).
  auto ctx = context(ellipses(Domain{1.7, 2.6, 1.7, 2.6}), 16, Vec2(1.7, 1.7));
  const auto& e = ctx->e();
  const Lattice& lat = ctx->lattice();
  for (int j = 0; j < lat.grid.nv; j += 5) {
    for (int p = 0; p + 1 < lat.row_length(); p += 7) {
      const int a = lat.row_point(j, p), b = lat.row_point(j, p + 1);
      const double du = lat.point(b).x() - lat.point(a).x();
      Vec4 pred;
      for (int c = 0; c < 4; ++c) pred[c] = e.jets[a][c].evaluate(du, 0.0);
      CHECK((pred - e.value(b)).norm() < 50 * std::pow(du, 3));
    }
  }
}
