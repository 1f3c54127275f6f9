#include "r4surf/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#ifndef R4SURF_VERSION
#define R4SURF_VERSION "0.0.0"
#endif

namespace r4surf {

using nlohmann::json;

const char* version() { return R4SURF_VERSION; }

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(what + ": unknown field '" + key + "'");
  }
}

double finite(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw ConfigError(what + " must be finite");
  return x;
}

double field(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw ConfigError(what + " requires '" + key + "'");
  return finite(j.at(key), what + "." + key);
}

Vec4 vec4(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(what + " must be an array of 4 numbers");
  Vec4 v;
  for (int k = 0; k < 4; ++k) v[k] = finite(j[k], what);
  return v;
}

json vec_json(const Vec4& v) { return json::array({v[0], v[1], v[2], v[3]}); }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

SurfaceSpec surface_source(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_string()) return surface_from_json(j, base_dir);
  std::filesystem::path p = j.get<std::string>();
  if (p.is_relative()) p = base_dir / p;
  if (p.extension() == ".csv") return load_mesh_csv(p);
  return surface_from_json(read_json(p), p.parent_path());
}

int grid_side(const json& j, const char* what) {
  if (!j.is_number_integer()) throw ConfigError(std::string("grid ") + what + " must be an integer");
  return j.get<int>();
}

}  // namespace

void check_grid(int nu, int nv) {
  const std::string got = " (got " + std::to_string(nu) + "x" + std::to_string(nv) + ")";
  if (nu < kMinGridSide || nv < kMinGridSide) {
    throw ConfigError("grid too small: nu and nv must be at least " +
                      std::to_string(kMinGridSide) + got);
  }
  if (nu > kMaxGridSide || nv > kMaxGridSide) {
    throw ConfigError("grid too large: nu and nv must be at most " +
                      std::to_string(kMaxGridSide) + got);
  }
}

std::pair<int, int> parse_grid(const std::string& s) {
  const auto x = s.find_first_of("xX");
  int nu = 0, nv = 0;
  std::size_t used = 0;
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    nu = std::stoi(s.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(s);
    nv = std::stoi(s.substr(x + 1), &used);
    if (used != s.size() - x - 1) throw std::invalid_argument(s);
  } catch (const std::logic_error&) {
    throw ConfigError("grid must look like NUxNV, got '" + s + "'");
  }
  check_grid(nu, nv);
  return {nu, nv};
}

TransformSpec transform_from_json(const json& j) {
  std::string kind;
  if (j.is_string()) {
    kind = j.get<std::string>();
  } else if (j.is_object() && j.contains("kind") && j.at("kind").is_string()) {
    kind = j.at("kind").get<std::string>();
  } else {
    throw ConfigError("pipeline stage must be a name or an object with a 'kind'");
  }
  const json obj = j.is_object() ? j : json::object();
  const std::string what = "stage '" + kind + "'";
  if (kind == "evolute" || kind == "envelope") {
    reject_unknown(obj, {"kind"}, what);
    return kind == "evolute" ? TransformSpec::evolute() : TransformSpec::envelope();
  }
  if (kind == "orthogonal") {
    reject_unknown(obj, {"kind", "t"}, what);
    return TransformSpec::orthogonal(field(obj, "t", what));
  }
  if (kind == "parallel") {
    reject_unknown(obj, {"kind", "t1", "t2", "z"}, what);
    std::optional<Vec4> z;
    if (obj.contains("z")) z = vec4(obj.at("z"), what + ".z");
    return TransformSpec::parallel(field(obj, "t1", what), field(obj, "t2", what), z);
  }
  if (kind == "shift") {
    reject_unknown(obj, {"kind", "z"}, what);
    if (!obj.contains("z")) throw ConfigError(what + " requires 'z'");
    return TransformSpec::shift(vec4(obj.at("z"), what + ".z"));
  }
  throw ConfigError("unknown pipeline stage '" + kind + "'");
}

json to_json(const TransformSpec& s) {
  switch (s.kind) {
    case TransformKind::kEvolute: return {{"kind", "evolute"}};
    case TransformKind::kEnvelope: return {{"kind", "envelope"}};
    case TransformKind::kOrthogonal: return {{"kind", "orthogonal"}, {"t", s.t}};
    case TransformKind::kParallel: {
      json j = {{"kind", "parallel"}, {"t1", s.t1}, {"t2", s.t2}};
      if (s.z_seed) j["z"] = vec_json(*s.z_seed);
      return j;
    }
    case TransformKind::kShift:
      return {{"kind", "shift"}, {"z", vec_json(s.z_seed.value_or(Vec4::Zero()))}};
  }
  return {};
}

Tolerances tolerances_from_json(const json& j, Tolerances t) {
  if (!j.is_object()) throw ConfigError("tolerances must be an object");
  const std::map<std::string, double*> slots = {
      {"frame_tol", &t.frame_tol},         {"degeneracy_tol", &t.degeneracy_tol},
      {"flatness_tol", &t.flatness_tol},   {"fd_flatness_tol", &t.fd_flatness_tol},
      {"rank_tol", &t.rank_tol},           {"holonomy_tol", &t.holonomy_tol}};
  for (const auto& [key, value] : j.items()) {
    const auto it = slots.find(key);
    if (it == slots.end()) throw ConfigError("tolerances: unknown field '" + key + "'");
    *it->second = finite(value, "tolerances." + key);
  }
  t.validate();
  return t;
}

json to_json(const Tolerances& t) {
  return {{"frame_tol", t.frame_tol},       {"degeneracy_tol", t.degeneracy_tol},
          {"flatness_tol", t.flatness_tol}, {"fd_flatness_tol", t.fd_flatness_tol},
          {"rank_tol", t.rank_tol},         {"holonomy_tol", t.holonomy_tol}};
}

Vec2 RunConfig::base() const {
  return base_point.value_or(Vec2(surface.domain.u_min, surface.domain.v_min));
}

SuiteOptions RunConfig::suite_options() const {
  SuiteOptions o;
  o.check_tolerances = check_tolerances;
  return o;
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"surface", "grid", "base_point", "pipeline", "tolerances", "check_tolerances",
                  "outputs", "emit", "fail_on_inconclusive"},
                 "config");
  RunConfig c;
  if (!j.contains("surface")) throw ConfigError("config requires 'surface'");
  c.surface = surface_source(j.at("surface"), base_dir);
  const Domain& d = c.surface.domain;
  if (!std::isfinite(d.u_min) || !std::isfinite(d.u_max) || !std::isfinite(d.v_min) ||
      !std::isfinite(d.v_max)) {
    throw ConfigError("surface domain must be bounded");
  }

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    if (g.is_array() && g.size() == 2) {
      c.nu = grid_side(g[0], "nu");
      c.nv = grid_side(g[1], "nv");
    } else if (g.is_object()) {
      reject_unknown(g, {"nu", "nv"}, "grid");
      if (!g.contains("nu") || !g.contains("nv")) throw ConfigError("grid requires nu and nv");
      c.nu = grid_side(g.at("nu"), "nu");
      c.nv = grid_side(g.at("nv"), "nv");
    } else {
      throw ConfigError("grid must be {\"nu\": N, \"nv\": N} or [nu, nv]");
    }
  }
  check_grid(c.nu, c.nv);

  if (j.contains("base_point")) {
    const json& b = j.at("base_point");
    if (!b.is_array() || b.size() != 2) throw ConfigError("base_point must be [u, v]");
    c.base_point = Vec2(finite(b[0], "base_point"), finite(b[1], "base_point"));
    if (!d.contains(*c.base_point)) throw ConfigError("base_point lies outside the surface domain");
  }

  if (j.contains("pipeline")) {
    const json& p = j.at("pipeline");
    if (!p.is_array()) throw ConfigError("pipeline must be an array");
    if (p.size() > 4) throw ConfigError("pipeline longer than 4 stages");
    for (const auto& s : p) c.pipeline.push_back(transform_from_json(s));
  }

  if (j.contains("tolerances")) c.tol = tolerances_from_json(j.at("tolerances"));
  if (j.contains("check_tolerances")) {
    const json& ct = j.at("check_tolerances");
    if (!ct.is_object()) throw ConfigError("check_tolerances must be an object");
    const auto& names = check_names();
    for (const auto& [key, value] : ct.items()) {
      if (std::find(names.begin(), names.end(), key) == names.end()) {
        throw ConfigError("check_tolerances: unknown check '" + key + "'");
      }
      const double x = finite(value, "check_tolerances." + key);
      if (x < 0) throw ConfigError("check_tolerances." + key + " must be >= 0");
      c.check_tolerances[key] = x;
    }
  }

  if (j.contains("outputs")) {
    if (!j.at("outputs").is_string()) throw ConfigError("outputs must be a directory path");
    c.outputs = j.at("outputs").get<std::string>();
  }
  if (c.outputs.is_relative()) c.outputs = base_dir / c.outputs;

  if (j.contains("emit")) {
    const json& e = j.at("emit");
    if (!e.is_array()) throw ConfigError("emit must be an array");
    c.emit_mesh = c.emit_diagnostics = c.emit_report = false;
    for (const auto& x : e) {
      const std::string s = x.is_string() ? x.get<std::string>() : "";
      if (s == "mesh") {
        c.emit_mesh = true;
      } else if (s == "diagnostics") {
        c.emit_diagnostics = true;
      } else if (s == "report") {
        c.emit_report = true;
      } else {
        throw ConfigError("emit: unknown output '" + (x.is_string() ? s : x.dump()) +
                          "' (expected mesh, diagnostics, report)");
      }
    }
  }

  if (j.contains("fail_on_inconclusive")) {
    if (!j.at("fail_on_inconclusive").is_boolean()) {
      throw ConfigError("fail_on_inconclusive must be a boolean");
    }
    c.fail_on_inconclusive = j.at("fail_on_inconclusive").get<bool>();
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(read_json(path), path.parent_path());
}

std::unique_ptr<SurfaceContext> make_context(const SurfaceSpec& spec, const Grid& grid,
                                             const Tolerances& tol, const Vec2& base) {
  const Lattice lat(grid, kDefaultSamplesPerEdge);
  return std::make_unique<SurfaceContext>(sample_map(make_surface(spec), lat, 4), tol, base);
}

std::unique_ptr<SurfaceContext> make_context(const RunConfig& cfg) {
  return make_context(cfg.surface, cfg.grid(), cfg.tol, cfg.base());
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_mesh_csv(std::ostream& out, const Grid& grid, const std::vector<Vec4>& points,
                    const std::vector<int>& rank) {
  out << "u,v,x1,x2,x3,x4,rank\n";
  for (int k = 0; k < grid.size(); ++k) {
    const Vec2 p = grid.node(k);
    out << format_double(p.x()) << ',' << format_double(p.y());
    for (int i = 0; i < 4; ++i) {
      out << ',' << format_double(rank[k] < 0 ? std::nan("") : points[k][i]);
    }
    out << ',' << rank[k] << '\n';
  }
}

void write_mesh_csv(std::ostream& out, SurfaceContext& source, const SuiteResult& r, int stage) {
  const Grid& g = source.grid();
  std::vector<Vec4> pts;
  std::vector<int> rank(g.size());
  if (stage == 0) {
    pts = source.x().node_values();
    const auto& rk = source.rank();
    for (int k = 0; k < g.size(); ++k) rank[k] = rk[k].rank;
  } else {
    const TransformedSurface& f = r.stages.at(stage - 1).result;
    pts = f.points();
    for (int k = 0; k < g.size(); ++k) rank[k] = f.masked[k] ? -1 : f.rank[k].rank;
  }
  write_mesh_csv(out, g, pts, rank);
}

void write_diag_csv(std::ostream& out, SurfaceContext& ctx) {
  const Grid& g = ctx.grid();
  const int n = g.size();
  const auto& geo = ctx.geometry();
  const auto& cls = ctx.classes();
  std::vector<std::optional<double>> c(n), e(n), j(n);
  try {
    const LatticeJets& cj = ctx.c();
    for (int k = 0; k < n; ++k) {
      if (cj.valid[k]) c[k] = cj.value(k).norm();
    }
  } catch (const GeometryError&) {
  }
  try {
    const SectionField& jf = ctx.j();
    for (int k = 0; k < n; ++k) {
      if (jf.valid[k]) j[k] = jf.values[k].norm();
    }
  } catch (const GeometryError&) {
  }
  try {
    const LatticeJets& ej = ctx.e();
    for (int k = 0; k < n; ++k) {
      if (ej.valid[k]) e[k] = ej.value(k).norm();
    }
  } catch (const GeometryError&) {
  }
  auto num = [](const std::optional<double>& x) { return format_double(x.value_or(std::nan(""))); };
  out << "u,v,class,gauss_K,normal_degeneracy,|c|,|e|,|j|,"
         "geometry_masked,c_masked,e_masked,j_masked\n";
  for (int k = 0; k < n; ++k) {
    const Vec2 p = g.node(k);
    out << format_double(p.x()) << ',' << format_double(p.y()) << ',';
    if (geo[k]) {
      out << (cls[k] ? to_string(cls[k]->kind) : "none") << ',' << format_double(geo[k]->gauss_K)
          << ',' << format_double(normal_degeneracy(*geo[k]));
    } else {
      out << "none,nan,nan";
    }
    out << ',' << num(c[k]) << ',' << num(e[k]) << ',' << num(j[k]) << ',' << !geo[k] << ','
        << !c[k] << ',' << !e[k] << ',' << !j[k] << '\n';
  }
}

json report_json(const RunConfig& cfg, const Vec2& base, const SuiteResult& r) {
  json pipeline = json::array();
  for (const auto& s : cfg.pipeline) pipeline.push_back(to_json(s));
  const Domain& d = cfg.surface.domain;
  json header = {
      {"surface", to_json(cfg.surface)},
      {"grid", {{"nu", cfg.nu}, {"nv", cfg.nv}, {"domain", {d.u_min, d.u_max, d.v_min, d.v_max}}}},
      {"base_point", {base.x(), base.y()}},
      {"pipeline", pipeline},
      {"tolerances", to_json(cfg.tol)},
      {"check_tolerances", cfg.check_tolerances},
      {"version", version()},
  };
  json checks = json::array();
  int pass = 0, fail = 0, inc = 0;
  for (const auto& c : r.reports) {
    checks.push_back(to_json(c));
    pass += c.status == CheckStatus::kPass;
    fail += c.status == CheckStatus::kFail;
    inc += c.status == CheckStatus::kInconclusive;
  }
  return {{"header", header},
          {"checks", checks},
          {"summary",
           {{"pass", pass},
            {"fail", fail},
            {"inconclusive", inc},
            {"fail_on_inconclusive", cfg.fail_on_inconclusive},
            {"passed", r.all_passed(cfg.fail_on_inconclusive)}}}};
}

json classify_summary(SurfaceContext& ctx) {
  const Grid& g = ctx.grid();
  const auto& geo = ctx.geometry();
  const auto& cls = ctx.classes();
  const auto& rk = ctx.rank();
  std::map<std::string, int> kinds = {{"none", 0}};
  for (auto p : {PointClass::kUmbilic, PointClass::kSemiumbilic, PointClass::kInflection,
                 PointClass::kNondegenerate}) {
    kinds[to_string(p)] = 0;
  }
  int ranks[3] = {0, 0, 0};
  double max_k = 0.0, max_nd = 0.0;
  for (int k = 0; k < g.size(); ++k) {
    ++ranks[std::clamp(rk[k].rank, 0, 2)];
    ++kinds[cls[k] ? to_string(cls[k]->kind) : "none"];
    if (geo[k]) {
      max_k = std::max(max_k, std::abs(geo[k]->gauss_K));
      max_nd = std::max(max_nd, normal_degeneracy(*geo[k]));
    }
  }
  json flat = {{"flat", true}};
  try {
    ctx.chart();
  } catch (const GeometryError& e) {
    flat = {{"flat", false}, {"reason", e.what()}};
  }
  const int classified = g.size() - kinds["none"];
  return {{"nodes", g.size()},
          {"rank", {{"0", ranks[0]}, {"1", ranks[1]}, {"2", ranks[2]}}},
          {"classes", kinds},
          {"semiumbilical", classified > 0 && kinds[to_string(PointClass::kSemiumbilic)] == classified},
          {"tangent_bundle", flat},
          {"max_abs_gauss_K", max_k},
          {"max_normal_degeneracy", max_nd},
          {"fd_tier", ctx.fd_tier()}};
}

}  // namespace r4surf
