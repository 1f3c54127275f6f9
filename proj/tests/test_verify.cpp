#include <cmath>
#include <limits>

#include "doctest.h"
#include "r4surf/verify.hpp"

using namespace r4surf;

namespace {

const Tolerances kTol;

std::unique_ptr<SurfaceContext> context(const SurfaceSpec& spec, int n, const Vec2& base) {
  const Lattice lat(Grid(n, n, spec.domain), kDefaultSamplesPerEdge);
  return std::make_unique<SurfaceContext>(sample_map(make_surface(spec), lat, 4), kTol, base);
}

SurfaceSpec ellipses() {
  return SurfaceSpec::product(PlaneCurve::ellipse(2, 1), PlaneCurve::ellipse(3, 1),
                              Domain{1.7, 2.6, 1.7, 2.6});
}

const CheckReport& find(const SuiteResult& r, const std::string& name, int stage) {
  for (const auto& c : r.reports) {
    if (c.name == name && c.stage == stage) return c;
  }
  FAIL("no report " << name << " at stage " << stage);
  throw 0;
}

}  // namespace

TEST_CASE("summarize: counts, max, worst node, NaN as infinity") {
  const Grid g(4, 4, Domain{0, 3, 0, 3});
  std::vector<std::optional<double>> e(g.size());
  for (int k = 0; k < g.size(); ++k) e[k] = 0.01 * k;
  e[3] = std::nullopt;
  auto r = summarize("x", g, e, 1.0);
  CHECK(r.nodes_checked + r.nodes_masked == g.size());
  CHECK(r.nodes_masked == 1);
  CHECK(r.max_error == doctest::Approx(0.15));
  CHECK(r.worst_node.x() == 3.0);
  CHECK(r.worst_node.y() == 3.0);
  CHECK(r.status == CheckStatus::kPass);

  e[5] = std::numeric_limits<double>::quiet_NaN();
  r = summarize("x", g, e, 1.0);
  CHECK(std::isinf(r.max_error));
  CHECK(r.status == CheckStatus::kFail);
  CHECK(to_json(r)["max_error"] == "inf");
}

TEST_CASE("summarize: pass is strict and quantile keeps raw max") {
  const Grid g(4, 4, Domain{0, 1, 0, 1});
  std::vector<std::optional<double>> e(g.size(), 0.0);
  e[0] = 0.5;
  CHECK_FALSE(summarize("x", g, e, 0.5).pass);
  const auto q = summarize("x", g, e, 0.1, 0.9);
  CHECK(q.max_error == 0.0);
  CHECK(q.raw_max == 0.5);
  CHECK(q.pass);
}

TEST_CASE("summarize: more than half masked is inconclusive even if failing") {
  const Grid g(4, 4, Domain{0, 1, 0, 1});
  std::vector<std::optional<double>> e(g.size());
  for (int k = 0; k < 7; ++k) e[k] = 10.0;
  auto r = summarize("x", g, e, 1.0);
  CHECK_FALSE(r.pass);
  CHECK(r.status == CheckStatus::kInconclusive);
  e[7] = 10.0;  // exactly half masked
  r = summarize("x", g, e, 1.0);
  CHECK(r.status == CheckStatus::kFail);

  std::vector<std::optional<double>> none(g.size());
  r = summarize("x", g, none, 1.0);
  CHECK(r.nodes_checked == 0);
  CHECK(r.status == CheckStatus::kInconclusive);
}

TEST_CASE("all_passed honours fail_on_inconclusive") {
  SuiteResult s;
  s.reports.resize(2);
  s.reports[0].status = CheckStatus::kPass;
  s.reports[1].status = CheckStatus::kInconclusive;
  CHECK(s.all_passed());
  CHECK_FALSE(s.all_passed(true));
  s.reports[0].status = CheckStatus::kFail;
  CHECK_FALSE(s.all_passed());
}

TEST_CASE("plane: c is undefined, its check is fully masked") {
  auto m = context(SurfaceSpec::expression({"u", "v", "0", "0"}, Domain{-1, 1, -1, 1}), 16,
                   Vec2(0, 0));
  const auto r = surface_checks(*m);
  for (const auto& c : r) {
    if (c.name == "c_alpha_equals_g") {
      CHECK(c.nodes_checked == 0);
      CHECK(c.status == CheckStatus::kInconclusive);
    }
    if (c.name == "frame_orthonormality") CHECK(c.status == CheckStatus::kPass);
  }
}

TEST_CASE("torus evolute: rank 0 image, rank map consistent") {
  auto m = context(SurfaceSpec::product(PlaneCurve::circle(1.0, true),
                                        PlaneCurve::circle(1.0, true),
                                        Domain{0.3, 2.8, 0.3, 2.8}),
                   32, Vec2(0.3, 0.3));
  const auto r = run_suite(*m, {TransformSpec::evolute()});
  REQUIRE(r.stages.size() == 1);
  CHECK(r.stages[0].result.count_rank(0) == m->grid().size());
  const auto& rc = find(r, "rank_map_consistency", 1);
  CHECK(rc.status == CheckStatus::kPass);
  CHECK(find(r, "image_flatness", 1).status == CheckStatus::kInconclusive);
  CHECK(r.all_passed());
}

TEST_CASE("ellipse product, orthogonal 1/2: every check passes") {
  auto m = context(ellipses(), 48, Vec2(1.7, 1.7));
  const auto r = run_suite(*m, {TransformSpec::orthogonal(0.5)});
  for (const auto& c : r.reports) {
    INFO(c.name << " stage " << c.stage << " err " << c.max_error << " tol " << c.tolerance);
    CHECK(c.status == CheckStatus::kPass);
    CHECK(c.nodes_checked + c.nodes_masked == m->grid().size());
  }
  CHECK(find(r, "pullback_c", 1).max_error < 1e-8);
}

TEST_CASE("suite output is deterministic") {
  auto a = context(ellipses(), 24, Vec2(1.7, 1.7));
  auto b = context(ellipses(), 24, Vec2(1.7, 1.7));
  const std::vector<TransformSpec> p = {TransformSpec::orthogonal(0.3),
                                        TransformSpec::orthogonal(0.7)};
  const auto ra = run_suite(*a, p);
  const auto rb = run_suite(*b, p);
  REQUIRE(ra.reports.size() == rb.reports.size());
  for (std::size_t i = 0; i < ra.reports.size(); ++i) {
    CHECK(to_json(ra.reports[i]).dump() == to_json(rb.reports[i]).dump());
  }
}

TEST_CASE("check tolerance overrides apply by name") {
  auto m = context(ellipses(), 16, Vec2(1.7, 1.7));
  SuiteOptions opts;
  opts.check_tolerances["frame_orthonormality"] = 0.0;
  const auto r = run_suite(*m, {}, opts);
  const auto& c = find(r, "frame_orthonormality", 0);
  CHECK(c.tolerance == 0.0);
  CHECK(c.status == CheckStatus::kFail);
}

TEST_CASE("flat-only stage on a non-flat surface is a config error") {
  auto m = context(SurfaceSpec::expression({"u", "v", "u*u - v*v", "2*u*v"},
                                           Domain{0.2, 1, 0.2, 1}),
                   16, Vec2(0.2, 0.2));
  CHECK_THROWS_AS(run_suite(*m, {TransformSpec::envelope()}), ConfigError);
  CHECK_THROWS_AS(run_suite(*m, {TransformSpec::orthogonal(0.5)}), ConfigError);
}

TEST_CASE("at most four stages") {
  auto m = context(ellipses(), 12, Vec2(1.7, 1.7));
  const std::vector<TransformSpec> p(5, TransformSpec::shift(Vec4::Zero()));
  CHECK_THROWS_AS(run_suite(*m, p), ConfigError);
}
