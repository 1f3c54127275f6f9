#include "r4surf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace r4surf {

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::kPass: return "pass";
    case CheckStatus::kFail: return "fail";
    case CheckStatus::kInconclusive: return "inconclusive";
  }
  return "?";
}

CheckReport summarize(const std::string& name, const Grid& grid,
                      const std::vector<std::optional<double>>& errors, double tolerance,
                      std::optional<double> quantile) {
  CheckReport r;
  r.name = name;
  r.tolerance = tolerance;
  r.quantile = quantile;
  std::vector<double> seen;
  int worst = -1;
  for (int k = 0; k < static_cast<int>(errors.size()); ++k) {
    if (!errors[k]) continue;
    const double e = std::isnan(*errors[k]) ? std::numeric_limits<double>::infinity() : *errors[k];
    seen.push_back(e);
    if (worst < 0 || e > r.raw_max) {
      r.raw_max = e;
      worst = k;
    }
  }
  r.nodes_checked = static_cast<int>(seen.size());
  r.nodes_masked = grid.size() - r.nodes_checked;
  if (worst >= 0) r.worst_node = grid.node(worst);
  r.max_error = r.raw_max;
  if (quantile && !seen.empty()) {
    std::sort(seen.begin(), seen.end());
    const auto n = static_cast<double>(seen.size());
    const auto idx = static_cast<std::size_t>(std::max(0.0, std::ceil(*quantile * n) - 1.0));
    r.max_error = seen[std::min(idx, seen.size() - 1)];
  }
  r.pass = r.max_error < tolerance;
  if (2 * r.nodes_masked > grid.size()) {
    r.status = CheckStatus::kInconclusive;
  } else {
    r.status = r.pass ? CheckStatus::kPass : CheckStatus::kFail;
  }
  return r;
}

nlohmann::json to_json(const CheckReport& r) {
  auto num = [](double x) -> nlohmann::json {
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  };
  nlohmann::json j = {
      {"name", r.name},
      {"stage", r.stage},
      {"max_error", num(r.max_error)},
      {"raw_max", num(r.raw_max)},
      {"tolerance", r.tolerance},
      {"nodes_checked", r.nodes_checked},
      {"nodes_masked", r.nodes_masked},
      {"pass", r.pass},
      {"status", to_string(r.status)},
      {"worst_node", {r.worst_node.x(), r.worst_node.y()}},
  };
  if (r.quantile) j["quantile"] = *r.quantile;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

bool SuiteResult::all_passed(bool inconclusive_fails) const {
  for (const auto& r : reports) {
    if (r.status == CheckStatus::kFail) return false;
    if (inconclusive_fails && r.status == CheckStatus::kInconclusive) return false;
  }
  return true;
}

double default_tolerance(const std::string& name, const Tolerances& tol, bool fd) {
  if (name == "frame_orthonormality") return tol.frame_tol;
  if (name == "c_alpha_equals_g") return fd ? tol.fd_flatness_tol : 100 * tol.frame_tol;
  if (name == "c_two_formulas_agree") return fd ? tol.fd_flatness_tol : 10 * tol.frame_tol;
  if (name == "holonomy_tangent" || name == "holonomy_normal") {
    return fd ? tol.fd_flatness_tol : tol.holonomy_tol;
  }
  if (name == "orthogonality" || name == "parallelism" || name == "image_flatness" ||
      name == "image_normal_flatness") {
    return fd ? tol.fd_flatness_tol : tol.flatness_tol;
  }
  if (name == "image_no_inflection" || name == "rank_map_consistency") return 0.5;
  if (name == "permutability_delta_parallel" || name == "permutability_closed_form_parallel") {
    return 10 * tol.fd_flatness_tol;
  }
  return tol.fd_flatness_tol;
}

namespace {

using Errors = std::vector<std::optional<double>>;

struct Checker {
  const SuiteOptions& opts;
  std::vector<CheckReport>& out;

  CheckReport& add(const std::string& name, int stage, SurfaceContext& ctx, const Errors& err,
                   bool fd, std::optional<double> quantile = std::nullopt) {
    const auto it = opts.check_tolerances.find(name);
    const double tol =
        it != opts.check_tolerances.end() ? it->second : default_tolerance(name, ctx.tol(), fd);
    CheckReport r = summarize(name, ctx.grid(), err, tol, quantile);
    r.stage = stage;
    out.push_back(std::move(r));
    return out.back();
  }
  void masked(const std::string& name, int stage, SurfaceContext& ctx, bool fd,
              const std::string& why) {
    add(name, stage, ctx, Errors(ctx.grid().size()), fd).note = why;
  }
};

/// Whether the tangent bundle is flat (chart buildable), with the reason if not.
std::optional<std::string> flat_failure(SurfaceContext& m) {
  try {
    m.chart();
    return std::nullopt;
  } catch (const GeometryError& e) {
    return std::string(e.what());
  }
}

bool semiumbilical(SurfaceContext& m) {
  const auto& cls = m.classes();
  int geo = 0, semi = 0;
  for (const auto& c : cls) {
    if (!c) continue;
    ++geo;
    semi += c->kind == PointClass::kSemiumbilic;
  }
  return geo > 0 && semi == geo;
}

std::vector<Vec4> minus(const std::vector<Vec4>& a, const std::vector<Vec4>& b) {
  std::vector<Vec4> r(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] - b[k];
  return r;
}

std::vector<std::uint8_t> both(const std::vector<std::uint8_t>& a,
                               const std::vector<std::uint8_t>& b) {
  std::vector<std::uint8_t> r(std::min(a.size(), b.size()));
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = a[k] && b[k];
  return r;
}

void source_checks(SurfaceContext& m, int stage, Checker& ck) {
  const Grid& g = m.grid();
  const bool fd = m.fd_tier();
  const auto& geo = m.geometry();
  const auto& cls = m.classes();

  Errors frame(g.size());
  for (int k = 0; k < g.size(); ++k) {
    if (!geo[k]) continue;
    Eigen::Matrix4d f;
    f << geo[k]->t1, geo[k]->t2, geo[k]->n1, geo[k]->n2;
    frame[k] = (f.transpose() * f - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff();
  }
  ck.add("frame_orthonormality", stage, m, frame, fd);

  const LatticeJets& c = m.c();
  Errors cag(g.size()), two(g.size());
  for (int k = 0; k < g.size(); ++k) {
    if (!geo[k] || !c.valid[k]) continue;
    const PointGeometry& pg = *geo[k];
    const Vec4 cv = c.value(k);
    const double gij[3] = {pg.g(0, 0), pg.g(0, 1), pg.g(1, 1)};
    double e = 0.0;
    for (int q = 0; q < 3; ++q) e = std::max(e, std::abs(cv.dot(pg.alpha_chart[q]) - gij[q]));
    cag[k] = e;
    try {
      two[k] = compute_c(pg, *cls[k]).relative_gap;
    } catch (const GeometryError&) {
    }
  }
  ck.add("c_alpha_equals_g", stage, m, cag, fd);
  ck.add("c_two_formulas_agree", stage, m, two, fd);

  const auto not_flat = flat_failure(m);
  const bool semi = semiumbilical(m);

  if (not_flat) {
    ck.masked("lemma_2lema", stage, m, fd, *not_flat);
  } else {
    std::optional<LatticeJets> up;
    if (c.order < 1) up = from_nodes(c.lat, c.node_values(), c.node_valid());
    const LatticeJets& cd = up ? *up : c;
    Errors lem(g.size());
    for (int k = 0; k < g.size(); ++k) {
      if (!geo[k] || !cd.valid[k] || !c.valid[k]) continue;
      const PointGeometry& pg = *geo[k];
      const Vec4 cu = jet_derivative(cd.jets[k], 1, 0), cv = jet_derivative(cd.jets[k], 0, 1);
      Vec2 nabla[2];
      for (int i = 0; i < 2; ++i) {
        nabla[i] = pg.normal_coords(pg.frame_chart(0, i) * cu + pg.frame_chart(1, i) * cv);
      }
      lem[k] = std::max(std::abs(pg.alpha[0].dot(nabla[1])), std::abs(pg.alpha[1].dot(nabla[0])));
    }
    ck.add("lemma_2lema", stage, m, lem, fd);
  }

  const SectionField& j = m.j();
  const SectionField& jg = m.j_gradient();
  Errors jj(g.size());
  for (int k = 0; k < g.size(); ++k) {
    if (j.valid[k] && jg.valid[k]) jj[k] = (j.values[k] - jg.values[k]).norm();
  }
  ck.add("j_two_formulas_agree", stage, m, jj, fd);
  ck.add("c_minus_j_closure", stage, m,
         normal_derivative_error(m, minus(c.node_values(), j.values), both(c.node_valid(), j.valid)),
         fd);

  if (not_flat) {
    ck.masked("holonomy_tangent", stage, m, fd, *not_flat);
  } else {
    ck.add("holonomy_tangent", stage, m, m.holonomy_tangent().cell_defect, fd);
  }
  if (!semi) {
    ck.masked("holonomy_normal", stage, m, fd, "normal bundle not flat (surface not semiumbilical)");
  } else {
    ck.add("holonomy_normal", stage, m, m.holonomy_normal().cell_defect, fd);
  }

  if (not_flat) {
    ck.masked("e_defining_eq", stage, m, fd, *not_flat);
    ck.masked("k_defining_eq", stage, m, fd, *not_flat);
    return;
  }
  const LatticeJets& e = m.e();
  const auto grad = node_gradient(g, e.node_values(), e.node_valid());
  Errors ed(g.size());
  for (int k = 0; k < g.size(); ++k) {
    if (!grad[k] || !geo[k]) continue;
    const PointGeometry& pg = *geo[k];
    double r = 0.0;
    for (int i = 0; i < 2; ++i) {
      r = std::max(r, (pg.tangent_coords((*grad[k])[i]) - pg.tangent_coords(pg.jacobian.col(i)))
                          .norm());
    }
    ed[k] = r;
  }
  ck.add("e_defining_eq", stage, m, ed, fd);
  if (!semi) {
    ck.masked("k_defining_eq", stage, m, fd, "k needs a semiumbilical surface");
    return;
  }
  try {
    const SectionField& kf = m.k();
    ck.add("k_defining_eq", stage, m,
           normal_derivative_error(m, minus(kf.values, e.node_values()),
                                   both(kf.valid, e.node_valid())),
           fd);
  } catch (const GeometryError& ex) {
    ck.masked("k_defining_eq", stage, m, fd, ex.what());
  }
}

struct SourceFacts {
  bool flat = false;
  bool semi = false;
};

void stage_checks(SurfaceContext& src, const SourceFacts& facts, Stage& st, int stage,
                  Checker& ck) {
  const Grid& g = src.grid();
  const TransformedSurface& f = st.result;
  const TransformSpec& spec = f.spec;
  const bool fd = f.image.fd;
  const auto& sgeo = src.geometry();
  auto working = [&](int k) {
    return !f.masked[k] && f.rank[k].rank == 2 && !f.rank[k].marginal;
  };

  Errors leak(g.size());
  for (int k = 0; k < g.size(); ++k) {
    if (!working(k) || !sgeo[k]) continue;
    double w = 0.0;
    for (int i = 0; i < 2; ++i) {
      const Vec4 d = jet_derivative(f.image.jets[k], i == 0, i == 1);
      const Vec2 s = spec.orthogonal_type() ? sgeo[k]->tangent_coords(d) : sgeo[k]->normal_coords(d);
      w = std::max(w, s.cwiseAbs().maxCoeff());
    }
    leak[k] = w;
  }
  ck.add(spec.orthogonal_type() ? "orthogonality" : "parallelism", stage, src, leak, fd);

  bool want_flat = facts.flat && facts.semi, want_nflat = facts.flat && facts.semi;
  if (spec.kind == TransformKind::kEvolute ||
      (spec.kind == TransformKind::kOrthogonal && spec.t == 1.0)) {
    want_flat = facts.semi;
  }
  if (spec.kind == TransformKind::kEnvelope ||
      (spec.kind == TransformKind::kOrthogonal && spec.t == 0.0)) {
    want_nflat = facts.flat;
  }
  SurfaceContext& img = *st.image;
  const auto& igeo = img.geometry();
  const auto& icls = img.classes();
  Errors kk(g.size()), nd(g.size()), infl(g.size());
  for (int k = 0; k < g.size(); ++k) {
    if (!working(k) || !igeo[k]) continue;
    kk[k] = std::abs(igeo[k]->gauss_K);
    nd[k] = normal_degeneracy(*igeo[k]);
    infl[k] = icls[k] && icls[k]->inflection_like() ? 1.0 : 0.0;
  }
  const double q = ck.opts.image_quantile;
  if (want_flat) ck.add("image_flatness", stage, src, kk, fd, q);
  if (want_nflat) ck.add("image_normal_flatness", stage, src, nd, fd, q);
  if (want_flat && want_nflat) ck.add("image_no_inflection", stage, src, infl, fd);

  if (!spec.orthogonal_type()) return;
  const double t = spec.family_t();

  Errors rc(g.size());
  try {
    const auto pred = predicted_rank(src, spec);
    for (int j = 0; j < g.nv; ++j) {
      for (int i = 0; i < g.nu; ++i) {
        const int k = g.index(i, j);
        if (f.masked[k] || f.rank[k].marginal || pred[k] < 0) continue;
        bool match = false;
        for (int dj = -1; dj <= 1 && !match; ++dj) {
          for (int di = -1; di <= 1 && !match; ++di) {
            if (!g.valid(i + di, j + dj)) continue;
            match = pred[g.index(i + di, j + dj)] == f.rank[k].rank;
          }
        }
        rc[k] = match ? 0.0 : 1.0;
      }
    }
    ck.add("rank_map_consistency", stage, src, rc, fd);
  } catch (const GeometryError& ex) {
    ck.masked("rank_map_consistency", stage, src, fd, ex.what());
  }

  if (t != 1.0 && !facts.flat) return;
  if (src.fd_tier() || src.c().order < 1) {
    const char* why = "source sections are node values only; covered by the permutability checks";
    ck.masked("pullback_c", stage, src, true, why);
    if (t != 1.0 && facts.semi) ck.masked("pullback_e", stage, src, true, why);
    return;
  }
  std::optional<PulledBack> pb;
  try {
    pb = pullback_sections(src, t, false);
    const LatticeJets& ic = img.c();
    Errors pc(g.size());
    for (int k = 0; k < g.size(); ++k) {
      if (working(k) && ic.valid[k] && pb->c.valid[k]) {
        pc[k] = (ic.value(k) - pb->c.values[k]).norm();
      }
    }
    ck.add("pullback_c", stage, src, pc, true);
  } catch (const GeometryError& ex) {
    ck.masked("pullback_c", stage, src, true, ex.what());
  }
  if (t == 1.0 || !facts.semi) return;
  try {
    pb = pullback_sections(src, t, true);
  } catch (const GeometryError& ex) {
    ck.masked("pullback_e", stage, src, true, ex.what());
    return;
  }
  try {
    const FlatChart& fc = img.chart();
    const LatticeJets& ie = img.e();
    std::vector<std::uint8_t> ok(g.size());
    for (int k = 0; k < g.size(); ++k) ok[k] = working(k) && ie.valid[k] && pb->e->valid[k];
    const auto ref = nearest_valid_node(g, ok, g.node(img.base_node()));
    if (!ref) throw GeometryError("no node where both e fields exist");
    const Vec4 d0 = ie.value(*ref) - pb->e->values[*ref];
    const Vec2 w(d0.dot(fc.E1[*ref]), d0.dot(fc.E2[*ref]));
    Errors pe(g.size());
    for (int k = 0; k < g.size(); ++k) {
      if (!ok[k]) continue;
      pe[k] = (ie.value(k) - pb->e->values[k] - (w.x() * fc.E1[k] + w.y() * fc.E2[k])).norm();
    }
    ck.add("pullback_e", stage, src, pe, true).note = "compared modulo a parallel field";
  } catch (const GeometryError& ex) {
    ck.masked("pullback_e", stage, src, true, ex.what());
  }
}

constexpr const char* kPermutabilityChecks[4] = {
    "permutability_delta_tangential", "permutability_delta_parallel",
    "permutability_closed_form_tangential", "permutability_closed_form_parallel"};

void permutability_checks(SurfaceContext& src, double t1, double t2, int stage, Checker& ck) {
  const auto& names = kPermutabilityChecks;
  try {
    const Permutability p = permutability_defect(src, t1, t2);
    const int n = src.grid().size();
    Errors cf_t(n), cf_p(n);
    for (int k = 0; k < n; ++k) {
      if (p.ac_tangential[k] && p.bc_tangential[k]) {
        cf_t[k] = std::max(*p.ac_tangential[k], *p.bc_tangential[k]);
      }
      if (p.ac_parallel[k] && p.bc_parallel[k]) {
        cf_p[k] = std::max(*p.ac_parallel[k], *p.bc_parallel[k]);
      }
    }
    ck.add(names[0], stage, src, p.delta_tangential, true);
    ck.add(names[1], stage, src, p.delta_parallel, true);
    ck.add(names[2], stage, src, cf_t, true);
    ck.add(names[3], stage, src, cf_p, true);
  } catch (const GeometryError& ex) {
    for (const char* name : names) ck.masked(name, stage, src, true, ex.what());
  }
}

}  // namespace

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {
      "frame_orthonormality", "c_alpha_equals_g", "c_two_formulas_agree", "lemma_2lema",
      "j_two_formulas_agree", "c_minus_j_closure", "holonomy_tangent", "holonomy_normal",
      "e_defining_eq", "k_defining_eq", "orthogonality", "parallelism", "image_flatness",
      "image_normal_flatness", "image_no_inflection", "rank_map_consistency", "pullback_c",
      "pullback_e", kPermutabilityChecks[0], kPermutabilityChecks[1], kPermutabilityChecks[2],
      kPermutabilityChecks[3]};
  return names;
}

std::vector<CheckReport> surface_checks(SurfaceContext& m, const SuiteOptions& opts) {
  std::vector<CheckReport> out;
  Checker ck{opts, out};
  source_checks(m, 0, ck);
  return out;
}

SuiteResult run_suite(SurfaceContext& source, const std::vector<TransformSpec>& pipeline,
                      const SuiteOptions& opts) {
  if (pipeline.size() > 4) throw ConfigError("pipeline longer than 4 stages");
  SuiteResult res;
  Checker ck{opts, res.reports};
  source_checks(source, 0, ck);

  std::vector<SourceFacts> facts;
  SurfaceContext* src = &source;
  for (std::size_t s = 0; s < pipeline.size(); ++s) {
    const TransformSpec& spec = pipeline[s];
    SourceFacts sf;
    const auto not_flat = flat_failure(*src);
    sf.flat = !not_flat;
    sf.semi = semiumbilical(*src);
    if (spec.needs_flat() && not_flat) {
      throw ConfigError("stage " + std::to_string(s + 1) + " (" + spec.describe() +
                        ") needs a flat surface: " + *not_flat);
    }
    try {
      res.stages.push_back(run_stage(*src, spec));
    } catch (const GeometryError& ex) {
      throw ConfigError("stage " + std::to_string(s + 1) + " (" + spec.describe() +
                        "): " + ex.what());
    }
    facts.push_back(sf);
    const std::size_t first = res.reports.size();
    stage_checks(*src, sf, res.stages.back(), static_cast<int>(s + 1), ck);
    const TransformedSurface& f = res.stages.back().result;
    const int n = src->grid().size(), full = f.count_rank(2);
    if (2 * full < n) {
      const std::string note = "degenerate image: rank 0 at " + std::to_string(f.count_rank(0)) +
                               ", rank 1 at " + std::to_string(f.count_rank(1)) + " of " +
                               std::to_string(n) + " nodes";
      for (std::size_t i = first; i < res.reports.size(); ++i) {
        auto& r = res.reports[i];
        r.note = r.note.empty() ? note : note + "; " + r.note;
      }
    }
    src = res.stages.back().image.get();
  }
  for (std::size_t s = 0; s + 1 < pipeline.size(); ++s) {
    if (!pipeline[s].orthogonal_type() || !pipeline[s + 1].orthogonal_type()) continue;
    SurfaceContext& base = s == 0 ? source : *res.stages[s - 1].image;
    const int stage = static_cast<int>(s + 1);
    if (facts[s].flat && facts[s].semi) {
      permutability_checks(base, pipeline[s].family_t(), pipeline[s + 1].family_t(), stage, ck);
    } else {
      for (const char* name : kPermutabilityChecks) {
        ck.masked(name, stage, base, true, "permutability needs a flat semiumbilical surface");
      }
    }
    break;
  }
  return res;
}

}  // namespace r4surf
