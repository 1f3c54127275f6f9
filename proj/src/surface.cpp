#include "r4surf/surface.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace r4surf {

// ---------------------------------------------------------------------------
// VecMap

VecMap::VecMap(ValueFn value, JetFn jets, int analytic_order, Domain evaluable)
    : value_(std::move(value)),
      jets_(std::move(jets)),
      analytic_order_(jets_ ? analytic_order : 0),
      evaluable_(evaluable) {}

VecMap VecMap::from_jets(JetFn jets, int analytic_order, Domain evaluable) {
  auto value = [jets](const Vec2& p) { return jet_value(jets(p, 0)); };
  return VecMap(value, std::move(jets), analytic_order, evaluable);
}

VecMap VecMap::constant(const Vec4& v) {
  return from_jets([v](const Vec2&, int order) { return constant_jets(v, order); },
                   Jet2::kMaxOrder);
}

Vec4 VecMap::value(const Vec2& p) const {
  if (!value_) throw Error("empty map");
  return value_(p);
}

JetVec4 VecMap::jets(const Vec2& p, int order, const FDConfig& fd) const {
  if (jets_ && order <= analytic_order_) return jets_(p, order);
  if (order == 0) return constant_jets(value(p), 0);
  if (order <= 2) return fd_jets(p, order, fd);
  throw GeometryError("jets of order " + std::to_string(order) + " unavailable for this map");
}

JetVec4 VecMap::fd_jets(const Vec2& p, int order, const FDConfig& fd) const {
  return fd_jet4(value_, p, order, fd, evaluable_);
}

VecMap VecMap::fd_only() const { return VecMap(value_, nullptr, 0, evaluable_); }

VecMap linear_combination(const std::vector<std::pair<double, VecMap>>& terms) {
  std::vector<std::pair<double, VecMap>> live;
  int order = Jet2::kMaxOrder;
  Domain dom;
  for (const auto& t : terms) {
    if (t.first == 0.0) continue;
    live.push_back(t);
    order = std::min(order, t.second.analytic_order());
    const Domain& d = t.second.evaluable();
    dom.u_min = std::max(dom.u_min, d.u_min);
    dom.u_max = std::min(dom.u_max, d.u_max);
    dom.v_min = std::max(dom.v_min, d.v_min);
    dom.v_max = std::min(dom.v_max, d.v_max);
  }
  if (live.empty()) return VecMap::constant(Vec4::Zero());
  auto value = [live](const Vec2& p) {
    Vec4 sum = live.front().first * live.front().second.value(p);
    for (std::size_t k = 1; k < live.size(); ++k) sum += live[k].first * live[k].second.value(p);
    return sum;
  };
  auto jets = [live](const Vec2& p, int n) {
    JetVec4 sum = live.front().first * live.front().second.jets(p, n);
    for (std::size_t k = 1; k < live.size(); ++k) sum = sum + live[k].first * live[k].second.jets(p, n);
    return sum;
  };
  return VecMap(value, jets, order, dom);
}

// ---------------------------------------------------------------------------
// Curves

PlaneCurve PlaneCurve::circle(double r, bool arc_length) {
  if (!(r > 0.0)) throw ConfigError("circle radius must be positive");
  PlaneCurve c;
  c.kind = Kind::kCircle;
  c.r = r;
  c.arc_length = arc_length;
  return c;
}

PlaneCurve PlaneCurve::ellipse(double a, double b) {
  if (!(b > 0.0) || !(a >= b)) throw ConfigError("ellipse requires a >= b > 0");
  PlaneCurve c;
  c.kind = Kind::kEllipse;
  c.a = a;
  c.b = b;
  return c;
}

PlaneCurve PlaneCurve::expression(const std::string& x, const std::string& y) {
  static const std::vector<std::string> vars{"t"};
  PlaneCurve c;
  c.kind = Kind::kExpression;
  c.x_src = x;
  c.y_src = y;
  c.x = parse_expression(x, vars);
  c.y = parse_expression(y, vars);
  return c;
}

std::pair<Jet2, Jet2> PlaneCurve::eval(const Jet2& t) const {
  switch (kind) {
    case Kind::kCircle: {
      const Jet2 s = arc_length ? t / r : t;
      return {r * cos(s), r * sin(s)};
    }
    case Kind::kEllipse:
      return {a * cos(t), b * sin(t)};
    case Kind::kExpression: {
      const Jet2 vars[] = {t};
      return {evaluate(x, vars), evaluate(y, vars)};
    }
  }
  throw Error("unknown curve kind");
}

namespace {

std::string curve_name(const PlaneCurve& c) {
  std::ostringstream os;
  switch (c.kind) {
    case PlaneCurve::Kind::kCircle:
      os << "circle(" << c.r << (c.arc_length ? ", arc-length" : "") << ")";
      break;
    case PlaneCurve::Kind::kEllipse:
      os << "ellipse(" << c.a << ", " << c.b << ")";
      break;
    case PlaneCurve::Kind::kExpression:
      os << "curve(" << c.x_src << ", " << c.y_src << ")";
      break;
  }
  return os.str();
}

void check_domain(const Domain& d) {
  if (!d.bounded() || !(d.u_max > d.u_min) || !(d.v_max > d.v_min)) {
    throw ConfigError("surface domain must be a nonempty rectangle");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// SurfaceSpec

SurfaceSpec SurfaceSpec::product(PlaneCurve c1, PlaneCurve c2, const Domain& d) {
  check_domain(d);
  SurfaceSpec s;
  s.kind = Kind::kProduct;
  s.curve1 = std::move(c1);
  s.curve2 = std::move(c2);
  s.domain = d;
  auto check_range = [](const PlaneCurve& c, double lo, double hi) {
    if (c.param_range && (lo < c.param_range->first || hi > c.param_range->second)) {
      throw ConfigError("surface domain exceeds curve parameter range");
    }
  };
  check_range(s.curve1, d.u_min, d.u_max);
  check_range(s.curve2, d.v_min, d.v_max);
  return s;
}

SurfaceSpec SurfaceSpec::expression(const std::array<std::string, 4>& x, const Domain& d) {
  check_domain(d);
  SurfaceSpec s;
  s.kind = Kind::kExpression;
  s.domain = d;
  s.component_src = x;
  for (int k = 0; k < 4; ++k) s.components[k] = parse_expression(x[k]);
  return s;
}

SurfaceSpec SurfaceSpec::sampled(const Grid& grid, std::vector<Vec4> samples) {
  if (static_cast<int>(samples.size()) != grid.size()) {
    throw ConfigError("sample count does not match grid");
  }
  SurfaceSpec s;
  s.kind = Kind::kSampled;
  s.domain = grid.domain;
  s.nu = grid.nu;
  s.nv = grid.nv;
  s.samples = std::move(samples);
  return s;
}

std::string SurfaceSpec::describe() const {
  switch (kind) {
    case Kind::kProduct:
      return "product(" + curve_name(curve1) + ", " + curve_name(curve2) + ")";
    case Kind::kExpression:
      return "expression(" + component_src[0] + ", " + component_src[1] + ", " +
             component_src[2] + ", " + component_src[3] + ")";
    case Kind::kSampled:
      return "sampled(" + std::to_string(nu) + "x" + std::to_string(nv) + ")";
  }
  return "unknown";
}

VecMap make_surface(const SurfaceSpec& spec) {
  switch (spec.kind) {
    case SurfaceSpec::Kind::kProduct: {
      auto c1 = spec.curve1, c2 = spec.curve2;
      return VecMap::from_jets(
          [c1, c2](const Vec2& p, int order) {
            const auto [x1, x2] = c1.eval(Jet2::variable_u(p.x(), order));
            const auto [x3, x4] = c2.eval(Jet2::variable_v(p.y(), order));
            return JetVec4{x1, x2, x3, x4};
          },
          Jet2::kMaxOrder);
    }
    case SurfaceSpec::Kind::kExpression: {
      auto comps = spec.components;
      return VecMap::from_jets(
          [comps](const Vec2& p, int order) {
            const Jet2 vars[] = {Jet2::variable_u(p.x(), order), Jet2::variable_v(p.y(), order)};
            return JetVec4{evaluate(comps[0], vars), evaluate(comps[1], vars),
                           evaluate(comps[2], vars), evaluate(comps[3], vars)};
          },
          Jet2::kMaxOrder);
    }
    case SurfaceSpec::Kind::kSampled: {
      auto field = std::make_shared<BicubicField>(Grid(spec.nu, spec.nv, spec.domain),
                                                  spec.samples);
      return VecMap([field](const Vec2& p) { return field->evaluate(p); }, nullptr, 0,
                    field->evaluable());
    }
  }
  throw Error("unknown surface kind");
}

JetVec4 eval_surface(const SurfaceSpec& spec, const Vec2& at, int order) {
  const double slack = 1e-12 * (1.0 + at.norm());
  if (!spec.domain.contains(at, slack)) throw GeometryError("point outside surface domain");
  if (order < 0 || order > Jet2::kMaxOrder) throw JetError("jet order out of range");
  if (spec.kind == SurfaceSpec::Kind::kSampled && order > 2) {
    throw GeometryError("sampled surfaces support jets of order <= 2");
  }
  return make_surface(spec).jets(at, order);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("unknown field '" + key + "' in " + what);
    }
  }
}

double number(const json& j, const char* key, const char* what) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ConfigError(std::string(what) + " requires numeric field '" + key + "'");
  }
  return j.at(key).get<double>();
}

std::string text(const json& j, const char* key, const char* what) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw ConfigError(std::string(what) + " requires string field '" + key + "'");
  }
  return j.at(key).get<std::string>();
}

Domain domain_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ConfigError("domain must be [u0, u1, v0, v1]");
  for (const auto& x : j) {
    if (!x.is_number()) throw ConfigError("domain must be [u0, u1, v0, v1]");
  }
  Domain d{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  check_domain(d);
  return d;
}

json domain_json(const Domain& d) { return json::array({d.u_min, d.u_max, d.v_min, d.v_max}); }

PlaneCurve curve_from(const json& j) {
  if (!j.is_object()) throw ConfigError("curve must be a JSON object");
  const std::string kind = text(j, "kind", "curve");
  PlaneCurve c;
  if (kind == "circle") {
    reject_unknown(j, {"kind", "r", "arc_length", "range"}, "circle");
    c = PlaneCurve::circle(number(j, "r", "circle"), j.value("arc_length", false));
  } else if (kind == "ellipse") {
    reject_unknown(j, {"kind", "a", "b", "range"}, "ellipse");
    c = PlaneCurve::ellipse(number(j, "a", "ellipse"), number(j, "b", "ellipse"));
  } else if (kind == "expression") {
    reject_unknown(j, {"kind", "x", "y", "range"}, "curve expression");
    try {
      c = PlaneCurve::expression(text(j, "x", "curve"), text(j, "y", "curve"));
    } catch (const ParseError& e) {
      throw ConfigError(std::string("curve expression: ") + e.what());
    }
  } else {
    throw ConfigError("unknown curve kind '" + kind + "'");
  }
  if (j.contains("range")) {
    const auto& r = j.at("range");
    if (!r.is_array() || r.size() != 2 || !(r[1].get<double>() > r[0].get<double>())) {
      throw ConfigError("curve range must be [t0, t1] with t1 > t0");
    }
    c.param_range = std::make_pair(r[0].get<double>(), r[1].get<double>());
  }
  return c;
}

json curve_json(const PlaneCurve& c) {
  json j;
  switch (c.kind) {
    case PlaneCurve::Kind::kCircle:
      j = {{"kind", "circle"}, {"r", c.r}, {"arc_length", c.arc_length}};
      break;
    case PlaneCurve::Kind::kEllipse:
      j = {{"kind", "ellipse"}, {"a", c.a}, {"b", c.b}};
      break;
    case PlaneCurve::Kind::kExpression:
      j = {{"kind", "expression"}, {"x", c.x_src}, {"y", c.y_src}};
      break;
  }
  if (c.param_range) j["range"] = {c.param_range->first, c.param_range->second};
  return j;
}

}  // namespace

SurfaceSpec surface_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("surface must be a JSON object");
  const std::string kind = text(j, "kind", "surface");
  if (kind == "product") {
    reject_unknown(j, {"kind", "domain", "curve1", "curve2"}, "product surface");
    if (!j.contains("domain") || !j.contains("curve1") || !j.contains("curve2")) {
      throw ConfigError("product surface requires domain, curve1, curve2");
    }
    return SurfaceSpec::product(curve_from(j.at("curve1")), curve_from(j.at("curve2")),
                                domain_from(j.at("domain")));
  }
  if (kind == "expression") {
    reject_unknown(j, {"kind", "domain", "x"}, "expression surface");
    if (!j.contains("domain") || !j.contains("x")) {
      throw ConfigError("expression surface requires domain and x");
    }
    const auto& x = j.at("x");
    if (!x.is_array() || x.size() != 4) {
      throw ConfigError("expression surface needs exactly 4 component expressions");
    }
    std::array<std::string, 4> src;
    for (int k = 0; k < 4; ++k) {
      if (!x[k].is_string()) throw ConfigError("component expressions must be strings");
      src[k] = x[k].get<std::string>();
    }
    try {
      return SurfaceSpec::expression(src, domain_from(j.at("domain")));
    } catch (const ParseError& e) {
      throw ConfigError(std::string("surface expression: ") + e.what());
    }
  }
  if (kind == "sampled") {
    reject_unknown(j, {"kind", "csv", "domain", "nu", "nv", "points"}, "sampled surface");
    if (j.contains("csv")) {
      std::filesystem::path p = text(j, "csv", "sampled surface");
      if (p.is_relative()) p = base_dir / p;
      return load_mesh_csv(p);
    }
    if (!j.contains("domain") || !j.contains("points")) {
      throw ConfigError("sampled surface requires csv, or domain + nu + nv + points");
    }
    const Grid grid(static_cast<int>(number(j, "nu", "sampled surface")),
                    static_cast<int>(number(j, "nv", "sampled surface")),
                    domain_from(j.at("domain")));
    std::vector<Vec4> pts;
    for (const auto& row : j.at("points")) {
      if (!row.is_array() || row.size() != 4) throw ConfigError("sample points must have 4 coordinates");
      pts.emplace_back(row[0].get<double>(), row[1].get<double>(), row[2].get<double>(),
                       row[3].get<double>());
    }
    return SurfaceSpec::sampled(grid, std::move(pts));
  }
  throw ConfigError("unknown surface kind '" + kind + "'");
}

json to_json(const SurfaceSpec& s) {
  switch (s.kind) {
    case SurfaceSpec::Kind::kProduct:
      return {{"kind", "product"},
              {"domain", domain_json(s.domain)},
              {"curve1", curve_json(s.curve1)},
              {"curve2", curve_json(s.curve2)}};
    case SurfaceSpec::Kind::kExpression:
      return {{"kind", "expression"},
              {"domain", domain_json(s.domain)},
              {"x", json::array({s.component_src[0], s.component_src[1], s.component_src[2],
                                 s.component_src[3]})}};
    case SurfaceSpec::Kind::kSampled: {
      json pts = json::array();
      for (const auto& p : s.samples) pts.push_back({p[0], p[1], p[2], p[3]});
      return {{"kind", "sampled"},
              {"domain", domain_json(s.domain)},
              {"nu", s.nu},
              {"nv", s.nv},
              {"points", pts}};
    }
  }
  return {};
}

SurfaceSpec load_mesh_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read mesh file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("u,v,x1,x2,x3,x4", 0) != 0) {
    throw ConfigError("mesh file must start with header u,v,x1,x2,x3,x4");
  }
  std::map<std::pair<double, double>, Vec4> rows;
  std::set<double> us, vs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::array<double, 6> vals{};
    for (int k = 0; k < 6; ++k) {
      if (!std::getline(ls, cell, ',')) throw ConfigError("short row in mesh file");
      vals[k] = std::stod(cell);
    }
    us.insert(vals[0]);
    vs.insert(vals[1]);
    rows[{vals[1], vals[0]}] = Vec4(vals[2], vals[3], vals[4], vals[5]);
  }
  const int nu = static_cast<int>(us.size()), nv = static_cast<int>(vs.size());
  if (static_cast<int>(rows.size()) != nu * nv || nu < 5 || nv < 5) {
    throw ConfigError("mesh file is not a complete rectangular grid");
  }
  const Grid grid(nu, nv, Domain{*us.begin(), *us.rbegin(), *vs.begin(), *vs.rbegin()});
  std::vector<Vec4> samples;
  samples.reserve(rows.size());
  for (const auto& [key, x] : rows) samples.push_back(x);  // ordered by (v, u): u fastest
  return SurfaceSpec::sampled(grid, std::move(samples));
}

}  // namespace r4surf
