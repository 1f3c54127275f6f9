#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "r4surf/types.hpp"

namespace r4surf {

/// Rectangular lattice of nu x nv nodes spanning a bounded chart domain.
struct Grid {
  int nu = 0;
  int nv = 0;
  Domain domain;

  Grid() = default;
  Grid(int nu_, int nv_, const Domain& d);

  int size() const { return nu * nv; }
  int index(int i, int j) const { return j * nu + i; }
  double hu() const { return (domain.u_max - domain.u_min) / (nu - 1); }
  double hv() const { return (domain.v_max - domain.v_min) / (nv - 1); }
  Vec2 node(int i, int j) const {
    return Vec2(domain.u_min + i * hu(), domain.v_min + j * hv());
  }
  Vec2 node(int k) const { return node(k % nu, k / nu); }
  std::pair<int, int> nearest(const Vec2& p) const;
  bool valid(int i, int j) const { return i >= 0 && j >= 0 && i < nu && j < nv; }
};

/// Fourth-order derivative of grid samples along one axis at position `at`.
///
/// `sample(k)` returns the sample at offset k along the axis (nullopt when the
/// node is masked or missing); `count` is the number of nodes on the line.
/// Central five-point stencils are used where they fit, one-sided
/// fourth-order stencils at the ends, and three-point stencils as a fallback
/// when masked nodes block the wider ones. Returns nullopt when nothing fits.
template <typename T, typename Sample>
std::optional<T> line_derivative(const Sample& sample, int at, int count, double h);

/// Scalar or vector samples on a Grid with Hermite bicubic interpolation.
/// Node derivatives come from fourth-order finite differences of the samples.
class BicubicField {
 public:
  BicubicField(Grid grid, std::vector<Vec4> values);

  const Grid& grid() const { return grid_; }
  const std::vector<Vec4>& values() const { return values_; }
  /// Interpolated value; points up to half a cell outside the domain extrapolate.
  Vec4 evaluate(const Vec2& p) const;
  /// Domain the interpolant accepts, padded by half a cell.
  Domain evaluable() const;

 private:
  Grid grid_;
  std::vector<Vec4> values_;
  std::vector<Vec4> du_, dv_, duv_;
};

// ---------------------------------------------------------------------------

template <typename T, typename Sample>
std::optional<T> line_derivative(const Sample& sample, int at, int count, double h) {
  auto get = [&](int k) -> std::optional<T> {
    if (at + k < 0 || at + k >= count) return std::nullopt;
    return sample(at + k);
  };
  auto combine = [&](std::initializer_list<std::pair<int, double>> stencil,
                     double denom) -> std::optional<T> {
    std::optional<T> acc;
    for (const auto& [k, w] : stencil) {
      auto s = get(k);
      if (!s) return std::nullopt;
      if (w == 0.0) continue;
      if (acc) {
        *acc += w * *s;
      } else {
        acc = T(w * *s);
      }
    }
    if (acc) *acc /= (denom * h);
    return acc;
  };
  if (auto d = combine({{-2, 1.0}, {-1, -8.0}, {1, 8.0}, {2, -1.0}}, 12.0)) return d;
  if (auto d = combine({{0, -25.0}, {1, 48.0}, {2, -36.0}, {3, 16.0}, {4, -3.0}}, 12.0)) return d;
  if (auto d = combine({{0, 25.0}, {-1, -48.0}, {-2, 36.0}, {-3, -16.0}, {-4, 3.0}}, 12.0)) {
    return d;
  }
  if (auto d = combine({{-1, -3.0}, {0, -10.0}, {1, 18.0}, {2, -6.0}, {3, 1.0}}, 12.0)) return d;
  if (auto d = combine({{1, 3.0}, {0, 10.0}, {-1, -18.0}, {-2, 6.0}, {-3, -1.0}}, 12.0)) return d;
  if (auto d = combine({{-1, -1.0}, {1, 1.0}}, 2.0)) return d;
  return std::nullopt;
}

}  // namespace r4surf
