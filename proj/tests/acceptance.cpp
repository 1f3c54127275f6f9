// Acceptance suite: one line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "r4surf/verify.hpp"

using namespace r4surf;

namespace {

constexpr int kN = 64;
const Tolerances kTol;
const Domain kEllipseDomain{1.7, 2.6, 1.7, 2.6};
const Domain kTorusDomain{0.3, 2.8, 0.3, 2.8};

SurfaceSpec ellipses() {
  return SurfaceSpec::product(PlaneCurve::ellipse(2, 1), PlaneCurve::ellipse(3, 1), kEllipseDomain);
}
SurfaceSpec torus() {
  return SurfaceSpec::product(PlaneCurve::circle(1.0, true), PlaneCurve::circle(1.0, true),
                              kTorusDomain);
}
SurfaceSpec ellipse_circle() {
  return SurfaceSpec::product(PlaneCurve::ellipse(2, 1), PlaneCurve::circle(1.0, true),
                              Domain{1.7, 2.6, 0.3, 2.8});
}

std::unique_ptr<SurfaceContext> context(const SurfaceSpec& spec) {
  const Lattice lat(Grid(kN, kN, spec.domain), kDefaultSamplesPerEdge);
  const Vec2 base(spec.domain.u_min, spec.domain.v_min);
  return std::make_unique<SurfaceContext>(sample_map(make_surface(spec), lat, 4), kTol, base);
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records "label=value" and fails unless value < bound.
  void below(const std::string& label, double value, double bound) {
    detail << (detail.tellp() > 0 ? "; " : "") << label << '=' << value << (value < bound ? "<" : ">=")
           << bound;
    if (!(value < bound)) pass = false;
  }
  void require(const std::string& label, bool ok) {
    detail << (detail.tellp() > 0 ? "; " : "") << label << (ok ? " ok" : " FAILED");
    if (!ok) pass = false;
  }
};

const CheckReport& report(const std::vector<CheckReport>& rs, const std::string& name, int stage) {
  for (const auto& r : rs) {
    if (r.name == name && r.stage == stage) return r;
  }
  throw Error("no report " + name);
}

// A check must have looked at most nodes to count.
void from_report(Outcome& o, const std::string& label, const CheckReport& r, double bound) {
  o.below(label, r.max_error, bound);
  if (2 * r.nodes_masked > r.nodes_checked + r.nodes_masked) o.require(label + " coverage", false);
}

bool working(const TransformedSurface& f, int k) {
  return !f.masked[k] && f.rank[k].rank == 2 && !f.rank[k].marginal;
}

// max |df(d_i) . s| over working nodes, s the tangent or normal frame of the source.
double frame_leak(SurfaceContext& m, const TransformedSurface& f, bool tangent) {
  const auto& geo = m.geometry();
  double worst = 0.0;
  for (int k = 0; k < m.grid().size(); ++k) {
    if (!working(f, k) || !geo[k]) continue;
    for (int i = 0; i < 2; ++i) {
      const Vec4 d = jet_derivative(f.image.jets[k], i == 0, i == 1);
      const Vec2 s = tangent ? geo[k]->tangent_coords(d) : geo[k]->normal_coords(d);
      worst = std::max(worst, s.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

// Fraction of working nodes of `f` whose image has |K| < bound.
double flat_fraction(const TransformedSurface& f, SurfaceContext& img, double bound) {
  const auto& geo = img.geometry();
  int n = 0, ok = 0;
  for (int k = 0; k < img.grid().size(); ++k) {
    if (!working(f, k) || !geo[k]) continue;
    ++n;
    ok += std::abs(geo[k]->gauss_K) < bound;
  }
  return n ? static_cast<double>(ok) / n : 0.0;
}

Vec2 curve_evolute(double a, double b, double t) {
  const double d = a * a - b * b;
  return Vec2(d / a * std::pow(std::cos(t), 3), -d / b * std::pow(std::sin(t), 3));
}

double speed(double a, double b, double t) { return std::hypot(a * std::sin(t), b * std::cos(t)); }
double kappa(double a, double b, double t) { return a * b / std::pow(speed(a, b, t), 3); }
Vec2 inward(double a, double b, double t) {
  return Vec2(-b * std::cos(t), -a * std::sin(t)) / speed(a, b, t);
}
double simpson(const std::function<double(double)>& f, double t0, double t1, int n) {
  const double h = (t1 - t0) / n;
  double s = f(t0) + f(t1);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(t0 + k * h);
  return s * h / 3.0;
}

struct Fixtures {
  std::unique_ptr<SurfaceContext> ell = context(ellipses());
  std::unique_ptr<SurfaceContext> tor = context(torus());
  std::vector<CheckReport> ell_checks = surface_checks(*ell);
  std::vector<CheckReport> tor_checks = surface_checks(*tor);
};

Outcome c_characterization(Fixtures& fx) {
  Outcome o;
  for (auto* rs : {&fx.ell_checks, &fx.tor_checks}) {
    const char* tag = rs == &fx.ell_checks ? "ellipses" : "torus";
    from_report(o, std::string(tag) + " c.alpha-g", report(*rs, "c_alpha_equals_g", 0), 1e-8);
    from_report(o, std::string(tag) + " formulas(rel)", report(*rs, "c_two_formulas_agree", 0), 1e-9);
  }
  return o;
}

Outcome evolute_flatness(Fixtures& fx) {
  Outcome o;
  Stage st = run_stage(*fx.ell, TransformSpec::evolute());
  o.require("analytic image", !st.result.image.fd);
  o.below("analytic miss fraction", 1.0 - flat_fraction(st.result, *st.image, 1e-6), 0.05 + 1e-12);

  const TransformedSurface& f = st.result;
  std::vector<std::uint8_t> ok(f.masked.size());
  for (std::size_t k = 0; k < ok.size(); ++k) ok[k] = !f.masked[k];
  SurfaceContext fd(from_nodes(fx.ell->lattice(), f.points(), ok), kTol, fx.ell->base_request());
  o.require("fd image", fd.fd_tier());
  o.below("fd miss fraction", 1.0 - flat_fraction(f, fd, 1e-4), 0.05 + 1e-12);
  return o;
}

Outcome evolute_oracle(Fixtures& fx) {
  Outcome o;
  const auto f = evolute(*fx.ell);
  const auto pts = f.points();
  double worst = 0.0;
  int masked = 0;
  for (int k = 0; k < fx.ell->grid().size(); ++k) {
    if (f.masked[k]) {
      ++masked;
      continue;
    }
    const Vec2 p = fx.ell->grid().node(k);
    const Vec2 a = curve_evolute(2, 1, p.x()), b = curve_evolute(3, 1, p.y());
    worst = std::max(worst, (pts[k] - Vec4(a.x(), a.y(), b.x(), b.y())).norm());
  }
  o.require("no masked nodes", masked == 0);
  o.below("max distance", worst, 1e-8);
  return o;
}

Outcome degenerate_evolute(Fixtures& fx) {
  Outcome o;
  const auto f = evolute(*fx.tor);
  const int n = fx.tor->grid().size();
  o.below("nodes not rank 0", n - f.count_rank(0), 1);
  double j = 0.0;
  int missing = 0;
  for (int k = 0; k < n; ++k) {
    if (!fx.tor->j().valid[k]) {
      ++missing;
      continue;
    }
    j = std::max(j, fx.tor->j().values[k].norm());
  }
  o.require("j everywhere", missing == 0);
  o.below("max |j|", j, 1e-10);
  return o;
}

Outcome envelope_normal_flatness(Fixtures& fx) {
  Outcome o;
  auto ec = context(ellipse_circle());
  for (auto [tag, m] : {std::pair<const char*, SurfaceContext*>{"ellipses", fx.ell.get()},
                        {"torus", fx.tor.get()},
                        {"ellipse x circle", ec.get()}}) {
    Stage st = run_stage(*m, TransformSpec::envelope());
    const auto& geo = st.image->geometry();
    double worst = 0.0;
    int n = 0;
    for (int k = 0; k < m->grid().size(); ++k) {
      if (!working(st.result, k) || !geo[k]) continue;
      ++n;
      worst = std::max(worst, normal_degeneracy(*geo[k]));
    }
    o.require(std::string(tag) + " coverage", 2 * n > m->grid().size());
    o.below(std::string(tag), worst, 1e-4);
  }
  return o;
}

Outcome roundtrip(Fixtures& fx) {
  Outcome o;
  SurfaceContext& m = *fx.ell;
  const auto f = evolute(m);
  SurfaceContext ev(f.image, kTol, m.base_request(), m.c().value(m.base_node()));
  const auto back = envelope(ev);
  const auto pts = back.points();
  double worst = 0.0;
  int masked = 0;
  for (int k = 0; k < m.grid().size(); ++k) {
    if (back.masked[k]) {
      ++masked;
      continue;
    }
    worst = std::max(worst, (pts[k] - m.x().value(k)).norm());
  }
  o.require("no masked nodes", masked == 0);
  o.below("max displacement", worst, 1e-6);
  return o;
}

Outcome orthogonality_parallelism(Fixtures& fx) {
  Outcome o;
  for (double t : {0.0, 0.25, 0.5, 1.0}) {
    const auto f = orthogonal_transform(*fx.ell, t);
    std::ostringstream tag;
    tag << "orthogonal(" << t << ")";
    o.require(tag.str() + " coverage", 2 * f.count_rank(2) > fx.ell->grid().size());
    o.below(tag.str(), frame_leak(*fx.ell, f, true), 1e-4);
  }
  const auto p = parallel_transform(*fx.ell, 0.25, 0.25);
  o.require("parallel coverage", 2 * p.count_rank(2) > fx.ell->grid().size());
  o.below("parallel(1/4,1/4)", frame_leak(*fx.ell, p, false), 1e-4);
  return o;
}

Outcome lemma(Fixtures& fx) {
  Outcome o;
  from_report(o, "ellipses", report(fx.ell_checks, "lemma_2lema", 0), 1e-4);
  from_report(o, "torus", report(fx.tor_checks, "lemma_2lema", 0), 1e-4);
  return o;
}

Outcome j_consistency(Fixtures& fx) {
  Outcome o;
  for (auto* rs : {&fx.ell_checks, &fx.tor_checks}) {
    const std::string tag = rs == &fx.ell_checks ? "ellipses" : "torus";
    from_report(o, tag + " formulas", report(*rs, "j_two_formulas_agree", 0), 1e-4);
    from_report(o, tag + " (c-j) defect", report(*rs, "c_minus_j_closure", 0), 1e-4);
  }
  return o;
}

Outcome k_equation(Fixtures& fx) {
  Outcome o;
  from_report(o, "ellipses defect", report(fx.ell_checks, "k_defining_eq", 0), 1e-4);
  from_report(o, "torus defect", report(fx.tor_checks, "k_defining_eq", 0), 1e-4);

  // Along the row v = v(1) only the first factor varies: the k component on its
  // inward normal changes by the integral of s kappa ds, s arc length from the base.
  SurfaceContext& m = *fx.ell;
  const Grid& g = m.grid();
  const auto& k = m.k();
  double worst = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    const double a = axis == 0 ? 2.0 : 3.0;
    const double t0 = axis == 0 ? kEllipseDomain.u_min : kEllipseDomain.v_min;
    auto node = [&](int q) { return axis == 0 ? g.index(q, 1) : g.index(1, q); };
    auto param = [&](int q) { return axis == 0 ? g.node(node(q)).x() : g.node(node(q)).y(); };
    auto comp = [&](int q) {
      const Vec2 n = inward(a, 1, param(q));
      const Vec4 nn = axis == 0 ? Vec4(n.x(), n.y(), 0, 0) : Vec4(0, 0, n.x(), n.y());
      return k.values[node(q)].dot(nn);
    };
    auto s_of = [&](double t) { return simpson([&](double r) { return speed(a, 1, r); }, t0, t, 400); };
    const int count = axis == 0 ? g.nu : g.nv;
    for (int q = 2; q < count; ++q) {
      if (!k.valid[node(q)] || !k.valid[node(1)]) continue;
      const double expect = simpson(
          [&](double t) { return s_of(t) * kappa(a, 1, t) * speed(a, 1, t); }, param(1), param(q), 200);
      worst = std::max(worst, std::abs((comp(q) - comp(1)) - expect));
    }
  }
  o.below("per-factor oracle", worst, 1e-4);
  return o;
}

Outcome permutability(Fixtures& fx) {
  Outcome o;
  const auto r = run_suite(*fx.ell, {TransformSpec::orthogonal(0.3), TransformSpec::orthogonal(0.7)});
  from_report(o, "delta tangential", report(r.reports, "permutability_delta_tangential", 1), 1e-4);
  from_report(o, "delta parallel", report(r.reports, "permutability_delta_parallel", 1), 1e-3);
  from_report(o, "closed form tangential",
              report(r.reports, "permutability_closed_form_tangential", 1), 1e-4);
  from_report(o, "closed form parallel",
              report(r.reports, "permutability_closed_form_parallel", 1), 1e-3);
  return o;
}

Outcome holonomy(Fixtures& fx) {
  Outcome o;
  for (auto* rs : {&fx.ell_checks, &fx.tor_checks}) {
    const std::string tag = rs == &fx.ell_checks ? "ellipses" : "torus";
    from_report(o, tag + " tangent", report(*rs, "holonomy_tangent", 0), 1e-8);
    from_report(o, tag + " normal", report(*rs, "holonomy_normal", 0), 1e-8);
  }
  return o;
}

Outcome pullback(Fixtures& fx) {
  Outcome o;
  const auto r = run_suite(*fx.ell, {TransformSpec::orthogonal(0.5)});
  from_report(o, "c", report(r.reports, "pullback_c", 1), 1e-4);
  from_report(o, "e", report(r.reports, "pullback_e", 1), 1e-4);
  return o;
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  Fixtures fx;
  const std::pair<const char*, Outcome (*)(Fixtures&)> criteria[] = {
      {"c characterization", c_characterization},
      {"evolute flatness", evolute_flatness},
      {"evolute oracle", evolute_oracle},
      {"degenerate evolute", degenerate_evolute},
      {"envelope normal flatness", envelope_normal_flatness},
      {"roundtrip", roundtrip},
      {"orthogonality / parallelism", orthogonality_parallelism},
      {"normal derivative of c along asymptotic directions", lemma},
      {"j consistency", j_consistency},
      {"k defining equation", k_equation},
      {"permutability", permutability},
      {"holonomy", holonomy},
      {"pullback formulas", pullback},
  };
  std::printf("grid %dx%d, fixtures %.1fs\n", kN, kN,
              std::chrono::duration<double>(Clock::now() - t0).count());
  int failed = 0, id = 0;
  for (const auto& [name, fn] : criteria) {
    ++id;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = fn(fx);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::printf("[%s] %2d %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", id, name, secs,
                o.detail.str().c_str());
    failed += !o.pass;
  }
  std::printf("%d/%d criteria passed\n", id - failed, id);
  return failed ? 1 : 0;
}
