#include "r4surf/transforms.hpp"

#include <cmath>
#include <sstream>

namespace r4surf {

bool TransformSpec::orthogonal_type() const {
  return kind == TransformKind::kEvolute || kind == TransformKind::kEnvelope ||
         kind == TransformKind::kOrthogonal;
}

double TransformSpec::family_t() const {
  switch (kind) {
    case TransformKind::kEvolute: return 1.0;
    case TransformKind::kEnvelope: return 0.0;
    default: return t;
  }
}

bool TransformSpec::needs_flat() const {
  switch (kind) {
    case TransformKind::kEvolute: return false;
    case TransformKind::kEnvelope: return true;
    case TransformKind::kOrthogonal: return t != 1.0;
    case TransformKind::kParallel: return t1 != 0.0;
    case TransformKind::kShift: return false;
  }
  return false;
}

bool TransformSpec::needs_semiumbilical() const {
  switch (kind) {
    case TransformKind::kEvolute: return true;
    case TransformKind::kEnvelope: return false;
    case TransformKind::kOrthogonal: return t != 0.0;
    case TransformKind::kParallel: return t1 != 0.0 || t2 != 0.0;
    case TransformKind::kShift: return false;
  }
  return false;
}

std::string TransformSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case TransformKind::kEvolute: os << "evolute"; break;
    case TransformKind::kEnvelope: os << "envelope"; break;
    case TransformKind::kOrthogonal: os << "orthogonal(" << t << ")"; break;
    case TransformKind::kParallel: os << "parallel(" << t1 << ", " << t2 << ")"; break;
    case TransformKind::kShift: os << "shift"; break;
  }
  if (z_seed && kind == TransformKind::kParallel) os << "+Z";
  return os.str();
}

int TransformedSurface::count_rank(int r) const {
  int n = 0;
  for (std::size_t k = 0; k < rank.size(); ++k) n += !masked[k] && rank[k].rank == r;
  return n;
}

namespace {

TransformedSurface finish(const TransformSpec& spec, LatticeJets image, const Tolerances& tol) {
  if (image.order < 2) image = from_nodes(image.lat, image.node_values(), image.node_valid());
  TransformedSurface out;
  out.spec = spec;
  const int n = image.lat.nodes();
  out.rank.resize(n);
  out.masked.assign(n, 0);
  for (int k = 0; k < n; ++k) {
    if (!image.valid[k]) {
      out.masked[k] = 1;
      continue;
    }
    Mat42 jac;
    jac << jet_derivative(image.jets[k], 1, 0), jet_derivative(image.jets[k], 0, 1);
    out.rank[k] = jacobian_rank(jac, rank_threshold(tol, image.fd));
  }
  out.image = std::move(image);
  return out;
}

TransformedSurface orthogonal_family(SurfaceContext& m, double t, const TransformSpec& spec) {
  std::vector<std::pair<double, const LatticeJets*>> terms{{1.0, &m.x()}};
  if (t != 0.0) terms.emplace_back(t, &m.c());
  if (t != 1.0) terms.emplace_back(-(1.0 - t), &m.e());
  return finish(spec, combine(terms), m.tol());
}

double max_of(const std::vector<std::optional<double>>& v) {
  double m = 0.0;
  for (const auto& x : v) {
    if (x) m = std::max(m, *x);
  }
  return m;
}

}  // namespace

TransformedSurface evolute(SurfaceContext& m) {
  return orthogonal_family(m, 1.0, TransformSpec::evolute());
}

TransformedSurface envelope(SurfaceContext& m, const LatticeJets* e) {
  if (!e) return orthogonal_family(m, 0.0, TransformSpec::envelope());
  if (e->lat.size() != m.lattice().size()) throw GeometryError("e lives on a different lattice");
  return finish(TransformSpec::envelope(), combine({{1.0, &m.x()}, {-1.0, e}}), m.tol());
}

TransformedSurface orthogonal_transform(SurfaceContext& m, double t) {
  if (!std::isfinite(t)) throw ConfigError("orthogonal parameter must be finite");
  return orthogonal_family(m, t, TransformSpec::orthogonal(t));
}

TransformedSurface parallel_transform(SurfaceContext& m, double t1, double t2,
                                      const SectionField* z) {
  if (!std::isfinite(t1) || !std::isfinite(t2)) {
    throw ConfigError("parallel parameters must be finite");
  }
  TransformSpec spec = TransformSpec::parallel(t1, t2);
  if (t1 == 0.0 && t2 == 0.0 && !z) return finish(spec, m.x(), m.tol());

  const Grid& g = m.grid();
  if (z) {
    if (z->grid.size() != g.size()) throw GeometryError("Z lives on a different grid");
    const auto& geo = m.geometry();
    double tangential = 0.0;
    for (int k = 0; k < g.size(); ++k) {
      if (z->valid[k] && geo[k]) {
        tangential = std::max(tangential, geo[k]->tangent_coords(z->values[k]).norm());
      }
    }
    const double drift = max_of(normal_derivative_error(m, z->values, z->valid));
    const double tol = m.tol().fd_flatness_tol;
    if (!(tangential < tol) || !(drift < tol)) {
      std::ostringstream os;
      os.precision(3);
      os << "Z is not a parallel normal section (tangential " << tangential << ", drift " << drift
         << ")";
      throw GeometryError(os.str());
    }
  }

  std::vector<Vec4> values = m.x().node_values();
  std::vector<std::uint8_t> valid = m.x().node_valid();
  auto add = [&](double s, auto value, auto ok) {
    for (int k = 0; k < g.size(); ++k) {
      if (!ok(k)) {
        valid[k] = 0;
      } else {
        values[k] += s * value(k);
      }
    }
  };
  if (t1 != 0.0) {
    const LatticeJets& e = m.e();
    const SectionField& kf = m.k();
    add(t1, [&](int k) { return Vec4(e.value(k) - kf.values[k]); },
        [&](int k) { return e.valid[k] && kf.valid[k]; });
  }
  if (t2 != 0.0) {
    const LatticeJets& c = m.c();
    const SectionField& j = m.j();
    add(t2, [&](int k) { return Vec4(c.value(k) - j.values[k]); },
        [&](int k) { return c.valid[k] && j.valid[k]; });
  }
  if (z) {
    add(1.0, [&](int k) { return z->values[k]; }, [&](int k) { return z->valid[k] != 0; });
  }
  LatticeJets img = from_nodes(m.lattice(), values, valid);
  return finish(spec, std::move(img), m.tol());
}

TransformedSurface apply(SurfaceContext& m, const TransformSpec& spec) {
  switch (spec.kind) {
    case TransformKind::kEvolute: return evolute(m);
    case TransformKind::kEnvelope: return envelope(m);
    case TransformKind::kOrthogonal: return orthogonal_transform(m, spec.t);
    case TransformKind::kParallel:
    case TransformKind::kShift: {
      std::optional<SectionField> z;
      if (spec.z_seed) z = m.parallel_field(Bundle::kNormal, *spec.z_seed);
      auto out = parallel_transform(m, spec.t1, spec.t2, z ? &*z : nullptr);
      out.spec = spec;
      return out;
    }
  }
  throw ConfigError("unknown transform");
}

PulledBack pullback_sections(SurfaceContext& m, double t, bool with_e) {
  if (with_e && t == 1.0) throw GeometryError("pulled-back e needs k, which requires t != 1");
  const Grid& g = m.grid();
  PulledBack out;
  out.c = SectionField(Bundle::kNormal, g);
  // c' is normal to the image, i.e. tangent to M; the bundle tag refers to the image.
  const LatticeJets* e = t != 1.0 ? &m.e() : nullptr;
  const SectionField* j = t != 0.0 ? &m.j() : nullptr;
  for (int k = 0; k < g.size(); ++k) {
    if ((e && !e->valid[k]) || (j && !j->valid[k])) continue;
    Vec4 v = Vec4::Zero();
    if (e) v += (1.0 - t) * e->value(k);
    if (j) v -= t * j->values[k];
    out.c.values[k] = v;
    out.c.valid[k] = 1;
  }
  if (with_e) {
    SectionField ef(Bundle::kTangent, g);
    const LatticeJets* c = t != 0.0 ? &m.c() : nullptr;
    const SectionField& kf = m.k();
    for (int k = 0; k < g.size(); ++k) {
      if ((c && !c->valid[k]) || !kf.valid[k]) continue;
      Vec4 v = -(1.0 - t) * kf.values[k];
      if (c) v += t * c->value(k);
      ef.values[k] = v;
      ef.valid[k] = 1;
    }
    out.e = std::move(ef);
  }
  return out;
}

std::vector<int> predicted_rank(SurfaceContext& m, const TransformSpec& spec) {
  if (!spec.orthogonal_type()) throw GeometryError("rank prediction covers orthogonal-type stages");
  const double t = spec.family_t();
  const Grid& g = m.grid();
  const auto& geo = m.geometry();
  const LatticeJets* e = t != 1.0 ? &m.e() : nullptr;
  const SectionField* j = t != 0.0 ? &m.j() : nullptr;
  const auto& cls = m.classes();
  std::vector<int> out(g.size(), -1);
  for (int k = 0; k < g.size(); ++k) {
    if (!geo[k] || geo[k]->alignment_skipped) continue;
    if ((e && !e->valid[k]) || (j && !j->valid[k])) continue;
    if (!cls[k] || cls[k]->inflection_like()) continue;
    Vec4 w = Vec4::Zero();
    if (j) w += t * j->values[k];
    if (e) w -= (1.0 - t) * e->value(k);
    const PointGeometry& pg = *geo[k];
    const Vec2 wc = pg.tangent_coords(w);
    Mat42 p;
    p << wc.x() * pg.normal(pg.alpha[0]), wc.y() * pg.normal(pg.alpha[1]);
    const Mat42 chart = p * pg.frame_chart.inverse();
    out[k] = jacobian_rank(chart, rank_threshold(m.tol(), m.fd_tier())).rank;
  }
  return out;
}

Stage run_stage(SurfaceContext& source, const TransformSpec& spec) {
  Stage s;
  s.result = apply(source, spec);
  s.image = std::make_unique<SurfaceContext>(s.result.image, source.tol(), source.base_request());
  return s;
}

Permutability permutability_defect(SurfaceContext& m, double t1, double t2) {
  Permutability out;
  out.t1 = t1;
  out.t2 = t2;
  const Grid& g = m.grid();

  auto route = [&](double first, double second) {
    Stage s = run_stage(m, TransformSpec::orthogonal(first));
    const TransformedSurface r = orthogonal_transform(*s.image, second);
    std::vector<Vec4> pts = r.points();
    std::vector<std::uint8_t> ok(g.size());
    for (int k = 0; k < g.size(); ++k) ok[k] = !r.masked[k] && !s.result.masked[k];
    return std::make_pair(std::move(pts), std::move(ok));
  };
  auto [a, a_ok] = route(t1, t2);
  std::vector<Vec4> b;
  std::vector<std::uint8_t> b_ok;
  if (t1 == t2) {
    b = a;
    b_ok = a_ok;
  } else {
    std::tie(b, b_ok) = route(t2, t1);
  }

  const double p = t1 * t2, q = (1.0 - t1) * (1.0 - t2);
  std::vector<Vec4> c = m.x().node_values();
  std::vector<std::uint8_t> c_ok = m.x().node_valid();
  if (p != 0.0) {
    const LatticeJets& cf = m.c();
    const SectionField& jf = m.j();
    for (int k = 0; k < g.size(); ++k) {
      if (cf.valid[k] && jf.valid[k]) {
        c[k] += p * (cf.value(k) - jf.values[k]);
      } else {
        c_ok[k] = 0;
      }
    }
  }
  if (q != 0.0) {
    const LatticeJets& ef = m.e();
    const SectionField& kf = m.k();
    for (int k = 0; k < g.size(); ++k) {
      if (ef.valid[k] && kf.valid[k]) {
        c[k] -= q * (ef.value(k) - kf.values[k]);
      } else {
        c_ok[k] = 0;
      }
    }
  }

  const auto& geo = m.geometry();
  out.valid.assign(g.size(), 0);
  out.delta = SectionField(Bundle::kNormal, g);
  std::vector<Vec4> ac(g.size(), Vec4::Zero()), bc(g.size(), Vec4::Zero());
  for (int k = 0; k < g.size(); ++k) {
    out.valid[k] = a_ok[k] && b_ok[k] && c_ok[k] && geo[k].has_value();
    if (!out.valid[k]) continue;
    out.delta.values[k] = a[k] - b[k];
    out.delta.valid[k] = 1;
    ac[k] = a[k] - c[k];
    bc[k] = b[k] - c[k];
  }
  auto tangential = [&](const std::vector<Vec4>& f) {
    std::vector<std::optional<double>> r(g.size());
    for (int k = 0; k < g.size(); ++k) {
      if (out.valid[k]) r[k] = geo[k]->tangent_coords(f[k]).norm();
    }
    return r;
  };
  out.delta_tangential = tangential(out.delta.values);
  out.ac_tangential = tangential(ac);
  out.bc_tangential = tangential(bc);
  out.delta_parallel = normal_derivative_error(m, out.delta.values, out.valid);
  out.ac_parallel = normal_derivative_error(m, ac, out.valid);
  out.bc_parallel = normal_derivative_error(m, bc, out.valid);
  out.parallel_defect = max_of(out.delta_parallel);
  out.route_a = std::move(a);
  out.route_b = std::move(b);
  out.route_c = std::move(c);
  return out;
}

}  // namespace r4surf
