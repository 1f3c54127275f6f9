#include "r4surf/grid.hpp"

#include <cmath>

namespace r4surf {

Grid::Grid(int nu_, int nv_, const Domain& d) : nu(nu_), nv(nv_), domain(d) {
  if (nu < 2 || nv < 2) throw ConfigError("grid too small");
  if (!d.bounded() || !(d.u_max > d.u_min) || !(d.v_max > d.v_min)) {
    throw ConfigError("grid domain must be a nonempty bounded rectangle");
  }
}

std::pair<int, int> Grid::nearest(const Vec2& p) const {
  const int i = static_cast<int>(std::lround((p.x() - domain.u_min) / hu()));
  const int j = static_cast<int>(std::lround((p.y() - domain.v_min) / hv()));
  return {std::clamp(i, 0, nu - 1), std::clamp(j, 0, nv - 1)};
}

BicubicField::BicubicField(Grid grid, std::vector<Vec4> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != grid_.size()) {
    throw ConfigError("sample count does not match grid");
  }
  if (grid_.nu < 5 || grid_.nv < 5) throw ConfigError("grid too small");
  const int n = grid_.size();
  du_.resize(n);
  dv_.resize(n);
  duv_.resize(n);
  for (int j = 0; j < grid_.nv; ++j) {
    for (int i = 0; i < grid_.nu; ++i) {
      auto along_u = [&](int k) -> std::optional<Vec4> { return values_[grid_.index(k, j)]; };
      auto along_v = [&](int k) -> std::optional<Vec4> { return values_[grid_.index(i, k)]; };
      du_[grid_.index(i, j)] = *line_derivative<Vec4>(along_u, i, grid_.nu, grid_.hu());
      dv_[grid_.index(i, j)] = *line_derivative<Vec4>(along_v, j, grid_.nv, grid_.hv());
    }
  }
  for (int j = 0; j < grid_.nv; ++j) {
    for (int i = 0; i < grid_.nu; ++i) {
      auto along_v = [&](int k) -> std::optional<Vec4> { return du_[grid_.index(i, k)]; };
      duv_[grid_.index(i, j)] = *line_derivative<Vec4>(along_v, j, grid_.nv, grid_.hv());
    }
  }
}

Domain BicubicField::evaluable() const {
  Domain d = grid_.domain;
  d.u_min -= 0.5 * grid_.hu();
  d.u_max += 0.5 * grid_.hu();
  d.v_min -= 0.5 * grid_.hv();
  d.v_max += 0.5 * grid_.hv();
  return d;
}

Vec4 BicubicField::evaluate(const Vec2& p) const {
  if (!evaluable().contains(p)) throw GeometryError("point outside sampled domain");
  const double hu = grid_.hu(), hv = grid_.hv();
  const double fu = (p.x() - grid_.domain.u_min) / hu;
  const double fv = (p.y() - grid_.domain.v_min) / hv;
  const int i = std::clamp(static_cast<int>(std::floor(fu)), 0, grid_.nu - 2);
  const int j = std::clamp(static_cast<int>(std::floor(fv)), 0, grid_.nv - 2);
  const double s = fu - i, t = fv - j;

  auto basis = [](double x) {
    const double x2 = x * x, x3 = x2 * x;
    // value weights for the left/right node, then slope weights
    return std::array<double, 4>{2 * x3 - 3 * x2 + 1, -2 * x3 + 3 * x2, x3 - 2 * x2 + x, x3 - x2};
  };
  const auto bs = basis(s), bt = basis(t);
  Vec4 out = Vec4::Zero();
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const int k = grid_.index(i + a, j + b);
      out += values_[k] * bs[a] * bt[b] + du_[k] * (hu * bs[2 + a] * bt[b]) +
             dv_[k] * (hv * bs[a] * bt[2 + b]) + duv_[k] * (hu * hv * bs[2 + a] * bt[2 + b]);
    }
  }
  return out;
}

}  // namespace r4surf
