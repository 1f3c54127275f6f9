#include <cmath>

#include "r4surf/jet.hpp"

namespace r4surf {

void validate(const FDConfig& cfg) {
  if (!(cfg.step > 0.0)) throw ConfigError("finite-difference step must be positive");
  if (cfg.richardson_levels < 1) throw ConfigError("richardson_levels must be at least 1");
}

std::vector<Jet2> fd_jet(const std::function<Eigen::VectorXd(const Vec2&)>& map,
                         const Vec2& at, int order, const FDConfig& cfg, const Domain& domain) {
  validate(cfg);
  if (order < 0 || order > 2) throw JetError("finite-difference jets support order <= 2");

  const Eigen::VectorXd f0 = map(at);
  const auto m = f0.size();
  std::vector<Jet2> out(static_cast<std::size_t>(m), Jet2(order));
  for (Eigen::Index k = 0; k < m; ++k) out[static_cast<std::size_t>(k)](0, 0) = f0[k];
  if (order == 0) return out;

  const int levels = cfg.richardson_levels;
  const double reach = std::ldexp(1.0, levels - 1);
  double h = cfg.step;
  const double margin = domain.margin(at);
  if (!(margin > 0.0)) throw JetError("stencil out of bounds");
  if (h * reach > margin) h = 0.999 * margin / reach;

  // Per level: d_u, d_v, d_uu, d_uv, d_vv stacked as columns.
  std::vector<Eigen::MatrixXd> table(static_cast<std::size_t>(levels));
  for (int lvl = 0; lvl < levels; ++lvl) {
    const double s = h * std::ldexp(1.0, lvl);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, 5);
    const Eigen::VectorXd up = map(at + Vec2(s, 0)), um = map(at - Vec2(s, 0));
    const Eigen::VectorXd vp = map(at + Vec2(0, s)), vm = map(at - Vec2(0, s));
    d.col(0) = (up - um) / (2 * s);
    d.col(1) = (vp - vm) / (2 * s);
    if (order >= 2) {
      const Eigen::VectorXd pp = map(at + Vec2(s, s)), pm = map(at + Vec2(s, -s));
      const Eigen::VectorXd mp = map(at + Vec2(-s, s)), mm = map(at + Vec2(-s, -s));
      d.col(2) = (up - 2 * f0 + um) / (s * s);
      d.col(3) = (pp - pm - mp + mm) / (4 * s * s);
      d.col(4) = (vp - 2 * f0 + vm) / (s * s);
    }
    table[static_cast<std::size_t>(lvl)] = std::move(d);
  }
  // Richardson: T_m(s) = (4^m T_{m-1}(s) - T_{m-1}(2s)) / (4^m - 1).
  for (int mlev = 1; mlev < levels; ++mlev) {
    const double w = std::ldexp(1.0, 2 * mlev);
    for (int lvl = 0; lvl + mlev < levels; ++lvl) {
      table[static_cast<std::size_t>(lvl)] =
          (w * table[static_cast<std::size_t>(lvl)] - table[static_cast<std::size_t>(lvl + 1)]) /
          (w - 1.0);
    }
  }
  const Eigen::MatrixXd& d = table.front();
  for (Eigen::Index k = 0; k < m; ++k) {
    Jet2& j = out[static_cast<std::size_t>(k)];
    j(1, 0) = d(k, 0);
    j(0, 1) = d(k, 1);
    if (order >= 2) {
      j(2, 0) = 0.5 * d(k, 2);
      j(1, 1) = d(k, 3);
      j(0, 2) = 0.5 * d(k, 4);
    }
  }
  return out;
}

JetVec4 fd_jet4(const std::function<Vec4(const Vec2&)>& map, const Vec2& at, int order,
                const FDConfig& cfg, const Domain& domain) {
  auto jets = fd_jet([&](const Vec2& p) -> Eigen::VectorXd { return map(p); }, at, order, cfg,
                     domain);
  return {jets[0], jets[1], jets[2], jets[3]};
}

}  // namespace r4surf
