#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "r4surf/run.hpp"

namespace py = pybind11;
using namespace r4surf;
using nlohmann::json;

namespace {

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

// (nv, nu, 4) with nan at masked nodes.
py::array_t<double> points_array(const Grid& g, const std::vector<Vec4>& pts,
                                 const std::vector<int>& rank) {
  py::array_t<double> a({g.nv, g.nu, 4});
  auto w = a.mutable_unchecked<3>();
  for (int j = 0; j < g.nv; ++j) {
    for (int i = 0; i < g.nu; ++i) {
      const int k = g.index(i, j);
      for (int c = 0; c < 4; ++c) w(j, i, c) = rank[k] < 0 ? std::nan("") : pts[k][c];
    }
  }
  return a;
}

py::array_t<int> rank_array(const Grid& g, const std::vector<int>& rank) {
  py::array_t<int> a({g.nv, g.nu});
  auto w = a.mutable_unchecked<2>();
  for (int k = 0; k < g.size(); ++k) w(k / g.nu, k % g.nu) = rank[k];
  return a;
}

py::tuple stage_arrays(SurfaceContext& source, const SuiteResult& r, int stage) {
  const Grid& g = source.grid();
  std::vector<Vec4> pts;
  std::vector<int> rank(g.size());
  if (stage == 0) {
    pts = source.x().node_values();
    for (int k = 0; k < g.size(); ++k) rank[k] = source.rank()[k].rank;
  } else {
    const auto& f = r.stages[stage - 1].result;
    pts = f.points();
    for (int k = 0; k < g.size(); ++k) rank[k] = f.masked[k] ? -1 : f.rank[k].rank;
  }
  return py::make_tuple(points_array(g, pts, rank), rank_array(g, rank));
}

py::dict run(const std::string& config, const std::string& base_dir, bool meshes) {
  const RunConfig cfg = run_config_from_json(parse(config), base_dir);
  auto ctx = make_context(cfg);
  SuiteResult r;
  {
    py::gil_scoped_release release;
    r = run_suite(*ctx, cfg.pipeline, cfg.suite_options());
  }
  py::dict out;
  out["report"] = report_json(cfg, ctx->grid().node(ctx->base_node()), r).dump();
  out["passed"] = r.all_passed(cfg.fail_on_inconclusive);
  if (meshes) {
    py::list m;
    for (int s = 0; s <= static_cast<int>(r.stages.size()); ++s) m.append(stage_arrays(*ctx, r, s));
    out["meshes"] = m;
  }
  return out;
}

std::string classify_config(const std::string& config, const std::string& base_dir) {
  const RunConfig cfg = run_config_from_json(parse(config), base_dir);
  auto ctx = make_context(cfg);
  json j = classify_summary(*ctx);
  j["surface"] = cfg.surface.describe();
  return j.dump();
}

py::tuple transform(const std::string& surface, int nu, int nv, const std::string& stage,
                    std::optional<std::pair<double, double>> base, const std::string& tolerances) {
  const SurfaceSpec spec = surface_from_json(parse(surface));
  check_grid(nu, nv);
  const Tolerances tol = tolerances_from_json(parse(tolerances));
  const Vec2 b = base ? Vec2(base->first, base->second) : Vec2(spec.domain.u_min, spec.domain.v_min);
  auto ctx = make_context(spec, Grid(nu, nv, spec.domain), tol, b);
  const TransformSpec ts = transform_from_json(parse(stage));
  SuiteResult r;
  {
    py::gil_scoped_release release;
    r.stages.push_back(run_stage(*ctx, ts));
  }
  return stage_arrays(*ctx, r, 1);
}

py::dict geometry(const std::string& surface, double u, double v) {
  const SurfaceSpec spec = surface_from_json(parse(surface));
  const Tolerances tol;
  const PointGeometry pg = point_geometry(spec, Vec2(u, v), tol);
  const Classification cls = classify(pg, tol);
  auto vec = [](const Vec4& x) { return std::vector<double>(x.data(), x.data() + 4); };
  py::dict d;
  d["point"] = vec(pg.point);
  d["frame"] = std::vector<std::vector<double>>{vec(pg.t1), vec(pg.t2), vec(pg.n1), vec(pg.n2)};
  d["gauss_K"] = pg.gauss_K;
  d["normal_degeneracy"] = normal_degeneracy(pg);
  d["class"] = std::string(to_string(cls.kind));
  d["asymptotic_angles"] = cls.asymptotic_angles;
  if (cls.kind == PointClass::kSemiumbilic) {
    try {
      d["c"] = vec(compute_c(pg, cls).jb);
    } catch (const GeometryError&) {
    }
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "native core of r4surf";
  auto& base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<GeometryError>(m, "GeometryError", base.ptr());
  py::register_exception<JetError>(m, "JetError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def("version", &version);
  m.def("run", &run, py::arg("config"), py::arg("base_dir"), py::arg("meshes"));
  m.def("classify", &classify_config, py::arg("config"), py::arg("base_dir"));
  m.def("transform", &transform, py::arg("surface"), py::arg("nu"), py::arg("nv"), py::arg("stage"),
        py::arg("base"), py::arg("tolerances"));
  m.def("geometry", &geometry, py::arg("surface"), py::arg("u"), py::arg("v"));
  m.def("check_names", &check_names);
}
