#include "r4surf/sections.hpp"

#include <cmath>
#include <sstream>

namespace r4surf {

const char* to_string(Bundle b) { return b == Bundle::kTangent ? "tangent" : "normal"; }

int SectionField::count_valid() const {
  int n = 0;
  for (auto v : valid) n += v != 0;
  return n;
}

// ---------------------------------------------------------------------------
// c

CValue compute_c(const PointGeometry& pg, const Classification& cl) {
  if (cl.inflection_like()) throw GeometryError("c undefined: inflection point");
  if (cl.kind != PointClass::kSemiumbilic) throw GeometryError("c undefined: point is not semiumbilic");
  const Vec2 jb = rotate_j(pg.B);
  const double h_jb = pg.H.dot(jb);
  if (std::abs(h_jb) < 1e-12) throw GeometryError("degenerate ellipse data");
  CValue out;
  out.jb = pg.normal(jb / h_jb);
  const Vec2 bhat = pg.B.normalized();
  const Vec2 n = pg.H - pg.H.dot(bhat) * bhat;
  out.nearest_point = pg.normal(n / n.squaredNorm());
  out.relative_gap = (out.jb - out.nearest_point).norm() / out.jb.norm();
  return out;
}

namespace {

using JetMat4 = std::array<std::array<Jet2, 4>, 4>;

// Gaussian elimination on jets, pivoting on the constant terms.
std::array<Jet2, 4> jet_solve(JetMat4 a, std::array<Jet2, 4> b) {
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::abs(a[r][col].value()) > std::abs(a[piv][col].value())) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    if (std::abs(a[col][col].value()) < 1e-300) throw GeometryError("singular system for c");
    const Jet2 inv = 1.0 / a[col][col];
    for (int r = col + 1; r < 4; ++r) {
      const Jet2 f = a[r][col] * inv;
      for (int k = col; k < 4; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::array<Jet2, 4> x;
  for (int r = 3; r >= 0; --r) {
    Jet2 s = b[r];
    for (int k = r + 1; k < 4; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

struct ChartJets {
  JetVec4 xu, xv, xuu, xuv, xvv;
  Jet2 ginv[2][2];
  JetVec4 alpha[3];  // uu, uv, vv normal parts
  const JetVec4& X(int k) const { return k == 0 ? xu : xv; }
  const JetVec4& A(int d, int k) const { return alpha[d + k]; }
};

ChartJets chart_jets(const JetVec4& x, int order) {
  ChartJets c;
  c.xu = truncated(d_du(x), order);
  c.xv = truncated(d_dv(x), order);
  c.xuu = truncated(d_du(d_du(x)), order);
  c.xuv = truncated(d_dv(d_du(x)), order);
  c.xvv = truncated(d_dv(d_dv(x)), order);
  const Jet2 g00 = dot(c.xu, c.xu), g01 = dot(c.xu, c.xv), g11 = dot(c.xv, c.xv);
  const Jet2 det = g00 * g11 - g01 * g01;
  c.ginv[0][0] = g11 / det;
  c.ginv[0][1] = -g01 / det;
  c.ginv[1][0] = c.ginv[0][1];
  c.ginv[1][1] = g00 / det;
  const JetVec4* second[3] = {&c.xuu, &c.xuv, &c.xvv};
  for (int q = 0; q < 3; ++q) {
    const Jet2 p0 = dot(c.xu, *second[q]), p1 = dot(c.xv, *second[q]);
    const Jet2 k0 = c.ginv[0][0] * p0 + c.ginv[0][1] * p1;
    const Jet2 k1 = c.ginv[1][0] * p0 + c.ginv[1][1] * p1;
    c.alpha[q] = *second[q] - scaled(c.xu, k0) - scaled(c.xv, k1);
  }
  return c;
}

JetVec4 truncate_all(const JetVec4& v, int order) { return truncated(v, order); }

// Extends a jet of order m by one degree from its two partial derivatives.
JetVec4 integrate(const JetVec4& f, const JetVec4& fu, const JetVec4& fv) {
  const int m = f[0].order();
  JetVec4 out;
  for (int c = 0; c < 4; ++c) {
    Jet2 s(m + 1);
    for (int q = 0; q < Jet2::size_for(m); ++q) s.data()[q] = f[c].data()[q];
    for (int a = 0; a <= m + 1; ++a) {
      const int b = m + 1 - a;
      s(a, b) = a > 0 ? fu[c](a - 1, b) / a : fv[c](a, b - 1) / b;
    }
    out[c] = s;
  }
  return out;
}

}  // namespace

JetVec4 c_jets(const JetVec4& x) {
  const int n = x[0].order() - 2;
  if (n < 0) throw GeometryError("c needs jets of order >= 2");
  const ChartJets cj = chart_jets(x, n);
  const JetVec4* rows[5] = {&cj.xu, &cj.xv, &cj.xuu, &cj.xuv, &cj.xvv};
  const Jet2 zero = Jet2::constant(0.0, n);
  const Jet2 rhs[5] = {zero, zero, dot(cj.xu, cj.xu), dot(cj.xu, cj.xv), dot(cj.xv, cj.xv)};
  JetMat4 m;
  std::array<Jet2, 4> b;
  for (int a = 0; a < 4; ++a) {
    b[a] = zero;
    for (int k = 0; k < 4; ++k) m[a][k] = zero;
    for (int q = 0; q < 5; ++q) {
      for (int k = a; k < 4; ++k) m[a][k] += (*rows[q])[a] * (*rows[q])[k];
      b[a] += (*rows[q])[a] * rhs[q];
    }
    for (int k = 0; k < a; ++k) m[a][k] = m[k][a];
  }
  const auto sol = jet_solve(m, b);
  return {sol[0], sol[1], sol[2], sol[3]};
}

JetVec4 field_jets(const JetVec4& x, const Vec4& value, int order, FieldEquation eq) {
  if (order < 0) throw GeometryError("negative jet order");
  if (x[0].order() < order + 1) throw GeometryError("surface jets too short for field jets");
  JetVec4 f = constant_jets(value, 0);
  if (order == 0) return f;
  const ChartJets full = chart_jets(x, order - 1);
  for (int m = 0; m < order; ++m) {
    JetVec4 X[2] = {truncate_all(full.xu, m), truncate_all(full.xv, m)};
    Jet2 gi[2][2];
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) gi[a][b] = full.ginv[a][b].truncated(m);
    }
    JetVec4 A[3];
    for (int q = 0; q < 3; ++q) A[q] = truncate_all(full.alpha[q], m);
    JetVec4 d[2];
    for (int dir = 0; dir < 2; ++dir) {
      switch (eq) {
        case FieldEquation::kPosition:
        case FieldEquation::kTangentParallel: {
          const Jet2 p0 = dot(X[0], f), p1 = dot(X[1], f);
          const Jet2 s0 = gi[0][0] * p0 + gi[0][1] * p1;
          const Jet2 s1 = gi[1][0] * p0 + gi[1][1] * p1;
          d[dir] = scaled(A[dir], s0) + scaled(A[dir + 1], s1);
          if (eq == FieldEquation::kPosition) d[dir] = d[dir] + X[dir];
          break;
        }
        case FieldEquation::kNormalParallel: {
          const Jet2 q0 = dot(A[dir], f), q1 = dot(A[dir + 1], f);
          const Jet2 s0 = gi[0][0] * q0 + gi[0][1] * q1;
          const Jet2 s1 = gi[1][0] * q0 + gi[1][1] * q1;
          d[dir] = -1.0 * (scaled(X[0], s0) + scaled(X[1], s1));
          break;
        }
      }
    }
    f = integrate(f, d[0], d[1]);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Transport right-hand sides

namespace {

Vec4 tangent_rhs(const Connection& c, int dir, const Vec4& s) {
  const Vec2 k = c.components(s);
  return k(0) * c.alpha_dk(dir, 0) + k(1) * c.alpha_dk(dir, 1);
}

Vec4 normal_rhs(const Connection& c, int dir, const Vec4& s) {
  const Vec2 q(c.alpha_dk(dir, 0).dot(s), c.alpha_dk(dir, 1).dot(s));
  return -(c.X * (c.ginv * q));
}

std::pair<Vec4, Vec4> tangent_basis(const Connection& c) {
  const Vec4 e1 = c.X.col(0).normalized();
  const Vec4 e2 = (c.X.col(1) - c.X.col(1).dot(e1) * e1).normalized();
  return {e1, e2};
}

std::pair<Vec4, Vec4> normal_basis(const Connection& c) {
  const auto [t1, t2] = tangent_basis(c);
  std::vector<Vec4> basis{t1, t2};
  for (int step = 0; step < 2; ++step) {
    Vec4 best = Vec4::Zero();
    for (int k = 0; k < 4; ++k) {
      Vec4 r = Vec4::Unit(k);
      for (int pass = 0; pass < 2; ++pass) {
        for (const Vec4& b : basis) r -= r.dot(b) * b;
      }
      if (r.norm() > best.norm() + 1e-14) best = r;
    }
    basis.push_back(best.normalized());
  }
  return {basis[2], basis[3]};
}

using V8 = Eigen::Matrix<double, 8, 1>;
using V10 = Eigen::Matrix<double, 10, 1>;
using V4 = Eigen::Matrix<double, 4, 1>;

V8 pair_rhs(Bundle bundle, const Connection& c, int dir, const V8& s) {
  V8 out;
  auto f = bundle == Bundle::kTangent ? tangent_rhs : normal_rhs;
  out << f(c, dir, s.head<4>()), f(c, dir, s.tail<4>());
  return out;
}

}  // namespace

Holonomy holonomy(const LatticeGeometry& g, Bundle bundle) {
  const Lattice& lat = g.lat;
  const Grid& grid = lat.grid;
  Holonomy h;
  h.cell_defect.resize(grid.size());
  const LineRhs<8> rhs = [bundle](const Connection& c, int dir, const V8& s) {
    return pair_rhs(bundle, c, dir, s);
  };
  for (int j = 0; j + 1 < grid.nv; ++j) {
    for (int i = 0; i + 1 < grid.nu; ++i) {
      const int n0 = grid.index(i, j);
      if (!g.valid[n0]) {
        ++h.cells_masked;
        continue;
      }
      const auto [a, b] = bundle == Bundle::kTangent ? tangent_basis(g.conn[n0])
                                                     : normal_basis(g.conn[n0]);
      V8 y;
      y << a, b;
      const V8 start = y;
      auto keep = [&](int, const V8& s) { y = s; };
      const int m = lat.m;
      bool ok = integrate_line<8>(g, 0, j, i * m, (i + 1) * m, y, rhs, keep);
      ok = ok && integrate_line<8>(g, 1, i + 1, j * m, (j + 1) * m, y, rhs, keep);
      ok = ok && integrate_line<8>(g, 0, j + 1, (i + 1) * m, i * m, y, rhs, keep);
      ok = ok && integrate_line<8>(g, 1, i, (j + 1) * m, j * m, y, rhs, keep);
      if (!ok) {
        ++h.cells_masked;
        continue;
      }
      ++h.cells_checked;
      const double d = std::max((y.head<4>() - start.head<4>()).norm(),
                                (y.tail<4>() - start.tail<4>()).norm());
      h.cell_defect[n0] = d;
      if (d > h.max_defect) {
        h.max_defect = d;
        h.worst_cell = grid.node(i, j);
      }
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// SurfaceContext

SurfaceContext::SurfaceContext(LatticeJets x, const Tolerances& tol, const Vec2& base,
                               std::optional<Vec4> e_seed)
    : x_(std::move(x)), tol_(tol), base_request_(base), e_seed_(std::move(e_seed)) {
  if (x_.order < 2) {
    const Lattice lat = x_.lat;
    x_ = from_nodes(lat, x_.node_values(), x_.node_valid());
  }
}

SurfaceContext::~SurfaceContext() = default;

const std::vector<std::optional<PointGeometry>>& SurfaceContext::geometry() {
  if (!geometry_) {
    const Grid& g = grid();
    std::vector<std::optional<PointGeometry>> out(g.size());
    std::vector<RankInfo> ranks(g.size());
    for (int k = 0; k < g.size(); ++k) {
      if (!x_.valid[k]) continue;
      Mat42 jac;
      jac << jet_derivative(x_.jets[k], 1, 0), jet_derivative(x_.jets[k], 0, 1);
      ranks[k] = jacobian_rank(jac, rank_threshold(tol_, fd_tier()));
      if (ranks[k].rank < 2) continue;
      try {
        out[k] = point_geometry(x_.jets[k], g.node(k), tol_);
      } catch (const GeometryError&) {
      }
    }
    geometry_ = std::move(out);
    rank_ = std::move(ranks);
  }
  return *geometry_;
}

const std::vector<RankInfo>& SurfaceContext::rank() {
  geometry();
  return *rank_;
}

const std::vector<std::optional<Classification>>& SurfaceContext::classes() {
  if (!classes_) {
    const auto& geo = geometry();
    std::vector<std::optional<Classification>> out(geo.size());
    for (std::size_t k = 0; k < geo.size(); ++k) {
      if (geo[k]) out[k] = classify(*geo[k], tol_, fd_tier());
    }
    classes_ = std::move(out);
  }
  return *classes_;
}

const LatticeGeometry& SurfaceContext::connection() {
  if (!connection_) connection_ = lattice_geometry(x_, rank_threshold(tol_, fd_tier()));
  return *connection_;
}

int SurfaceContext::base_node() {
  if (!base_node_) {
    const auto& geo = geometry();
    const auto& con = connection();
    std::vector<std::uint8_t> ok(grid().size(), 0);
    for (int k = 0; k < grid().size(); ++k) ok[k] = geo[k].has_value() && con.valid[k];
    const auto n = nearest_valid_node(grid(), ok, base_request_);
    if (!n) throw GeometryError("no node where the surface is an immersion");
    base_node_ = *n;
  }
  return *base_node_;
}

const LatticeJets& SurfaceContext::c() {
  if (!c_) {
    const auto& cls = classes();
    LatticeJets out;
    out.lat = x_.lat;
    out.order = std::min(2, x_.order - 2);
    out.fd = x_.fd;
    out.jets.assign(out.lat.size(), constant_jets(Vec4::Zero(), out.order));
    out.valid.assign(out.lat.size(), 0);
    const auto& con = connection();
    for (int k = 0; k < out.lat.size(); ++k) {
      if (!con.valid[k]) continue;
      bool ok;
      if (out.lat.is_node(k)) {
        ok = cls[k] && cls[k]->kind == PointClass::kSemiumbilic;
      } else {
        try {
          const auto pg = point_geometry(x_.jets[k], out.lat.point(k), tol_);
          ok = classify(pg, tol_, fd_tier()).kind == PointClass::kSemiumbilic;
        } catch (const GeometryError&) {
          ok = false;
        }
      }
      if (!ok) continue;
      try {
        out.jets[k] = truncated(c_jets(x_.jets[k]), out.order);
        out.valid[k] = 1;
      } catch (const Error&) {
      }
    }
    c_ = std::move(out);
  }
  return *c_;
}

const SectionField& SurfaceContext::j() {
  if (!j_) {
    const LatticeJets& cf = c();
    std::optional<LatticeJets> upgraded;
    if (cf.order < 1) upgraded = from_nodes(cf.lat, cf.node_values(), cf.node_valid());
    const LatticeJets& cd = upgraded ? *upgraded : cf;
    const auto& geo = geometry();
    SectionField comp(Bundle::kTangent, grid()), grad(Bundle::kTangent, grid());
    for (int k = 0; k < grid().size(); ++k) {
      if (!geo[k] || !cd.valid[k] || !cf.valid[k]) continue;
      const PointGeometry& pg = *geo[k];
      const Vec4 cu = jet_derivative(cd.jets[k], 1, 0), cv = jet_derivative(cd.jets[k], 0, 1);
      const Vec4 c0 = cf.value(k);
      const Vec4 b[2] = {pg.normal(pg.alpha[0]), pg.normal(pg.alpha[1])};
      const Vec4 t[2] = {pg.t1, pg.t2};
      Vec4 jc = Vec4::Zero();
      bool ok = true;
      for (int i = 0; i < 2; ++i) {
        const Vec4 dc = pg.frame_chart(0, i) * cu + pg.frame_chart(1, i) * cv;
        const double bb = b[i].squaredNorm();
        if (bb < 1e-300) {
          ok = false;
          break;
        }
        jc += (b[i].dot(dc) / bb) * t[i];
      }
      if (!ok) continue;
      comp.values[k] = jc;
      comp.valid[k] = 1;
      const Vec2 ds(c0.dot(cu), c0.dot(cv));
      grad.values[k] = pg.jacobian * (pg.g_inv() * ds);
      grad.valid[k] = 1;
    }
    j_ = std::move(comp);
    j_gradient_ = std::move(grad);
  }
  return *j_;
}

const SectionField& SurfaceContext::j_gradient() {
  j();
  return *j_gradient_;
}

const FlatChart& SurfaceContext::chart() {
  if (!chart_) {
    const auto& geo = geometry();
    double max_k = 0.0;
    for (const auto& pg : geo) {
      if (pg) max_k = std::max(max_k, std::abs(pg->gauss_K));
    }
    if (!(max_k < flatness_tol())) {
      std::ostringstream os;
      os.precision(3);
      os << "tangent bundle not flat (max K = " << max_k << ")";
      throw GeometryError(os.str());
    }
    const auto& con = connection();
    const int base = base_node();
    const auto [e1, e2] = tangent_basis(con.conn[base]);
    V10 y0;
    const Vec4 seed = e_seed_ ? con.conn[base].tangent_part(*e_seed_) : Vec4::Zero();
    y0 << e1, e2, seed.dot(e1), seed.dot(e2);
    const LineRhs<10> rhs = [](const Connection& c, int dir, const V10& s) {
      V10 out;
      out << tangent_rhs(c, dir, s.segment<4>(0)), tangent_rhs(c, dir, s.segment<4>(4)),
          s.segment<4>(0).dot(c.xd(dir)), s.segment<4>(4).dot(c.xd(dir));
      return out;
    };
    const auto sol = solve_staircase<10>(con, base, y0, rhs);
    FlatChart fc;
    fc.base_node = base;
    fc.base_point = grid().node(base);
    fc.max_gauss = max_k;
    const int n = lattice().size();
    fc.E1.resize(n);
    fc.E2.resize(n);
    fc.a.resize(n);
    fc.b.resize(n);
    fc.valid = sol.valid;
    for (int k = 0; k < n; ++k) {
      fc.E1[k] = sol.state[k].segment<4>(0);
      fc.E2[k] = sol.state[k].segment<4>(4);
      fc.a[k] = sol.state[k](8);
      fc.b[k] = sol.state[k](9);
    }
    chart_ = std::move(fc);
  }
  return *chart_;
}

const LatticeJets& SurfaceContext::e() {
  if (!e_) {
    const FlatChart& fc = chart();
    LatticeJets out;
    out.lat = x_.lat;
    out.order = std::min(2, x_.order - 1);
    out.fd = x_.fd;
    out.jets.assign(out.lat.size(), constant_jets(Vec4::Zero(), out.order));
    out.valid.assign(out.lat.size(), 0);
    for (int k = 0; k < out.lat.size(); ++k) {
      if (!fc.valid[k]) continue;
      const Vec4 v = fc.a[k] * fc.E1[k] + fc.b[k] * fc.E2[k];
      out.jets[k] = field_jets(x_.jets[k], v, out.order, FieldEquation::kPosition);
      out.valid[k] = 1;
    }
    e_ = std::move(out);
  }
  return *e_;
}

const SectionField& SurfaceContext::k() {
  if (!k_) {
    const LatticeJets& ef = e();
    LatticeJets v = combine({{1.0, &x_}, {-1.0, &ef}});
    envelope_ = std::make_unique<SurfaceContext>(std::move(v), tol_, base_request_);
    const LatticeJets& et = envelope_->e();
    SectionField out(Bundle::kNormal, grid());
    for (int k = 0; k < grid().size(); ++k) {
      if (!et.valid[k]) continue;
      out.values[k] = -et.value(k);
      out.valid[k] = 1;
    }
    k_ = std::move(out);
  }
  return *k_;
}

SectionField SurfaceContext::parallel_field(Bundle bundle, const Vec4& seed) {
  const auto& con = connection();
  const int base = base_node();
  const Connection& c0 = con.conn[base];
  const Vec4 s0 = bundle == Bundle::kTangent ? c0.tangent_part(seed) : c0.normal_part(seed);
  const LineRhs<4> rhs = [bundle](const Connection& c, int dir, const V4& s) -> V4 {
    return bundle == Bundle::kTangent ? tangent_rhs(c, dir, s) : normal_rhs(c, dir, s);
  };
  const auto sol = solve_staircase<4>(con, base, s0, rhs);
  SectionField out(bundle, grid());
  for (int k = 0; k < grid().size(); ++k) {
    out.values[k] = sol.state[k];
    out.valid[k] = sol.valid[k];
  }
  return out;
}

const Holonomy& SurfaceContext::holonomy_tangent() {
  if (!hol_t_) hol_t_ = holonomy(connection(), Bundle::kTangent);
  return *hol_t_;
}

const Holonomy& SurfaceContext::holonomy_normal() {
  if (!hol_n_) hol_n_ = holonomy(connection(), Bundle::kNormal);
  return *hol_n_;
}

std::vector<std::optional<std::array<Vec4, 2>>> node_gradient(
    const Grid& g, const std::vector<Vec4>& f, const std::vector<std::uint8_t>& ok) {
  std::vector<std::optional<std::array<Vec4, 2>>> out(g.size());
  auto sample = [&](int idx) { return ok[idx] ? std::optional<Vec4>(f[idx]) : std::nullopt; };
  for (int j = 0; j < g.nv; ++j) {
    for (int i = 0; i < g.nu; ++i) {
      if (!ok[g.index(i, j)]) continue;
      const auto du = line_derivative<Vec4>([&](int q) { return sample(g.index(q, j)); }, i,
                                            g.nu, g.hu());
      const auto dv = line_derivative<Vec4>([&](int q) { return sample(g.index(i, q)); }, j,
                                            g.nv, g.hv());
      if (du && dv) out[g.index(i, j)] = std::array<Vec4, 2>{*du, *dv};
    }
  }
  return out;
}

std::vector<std::optional<double>> normal_derivative_error(SurfaceContext& ctx,
                                                           const std::vector<Vec4>& values,
                                                           const std::vector<std::uint8_t>& valid) {
  const auto grad = node_gradient(ctx.grid(), values, valid);
  const auto& geo = ctx.geometry();
  std::vector<std::optional<double>> out(grad.size());
  for (std::size_t k = 0; k < grad.size(); ++k) {
    if (!grad[k] || !geo[k]) continue;
    out[k] = std::max(geo[k]->normal_coords((*grad[k])[0]).norm(),
                      geo[k]->normal_coords((*grad[k])[1]).norm());
  }
  return out;
}

}  // namespace r4surf
