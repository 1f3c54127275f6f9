#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "r4surf/grid.hpp"
#include "r4surf/jet.hpp"
#include "r4surf/surface.hpp"

namespace r4surf {

/// Grid nodes plus `m - 1` equally spaced sub-points on every grid edge.
///
/// Indices: nodes first (Grid::index), then horizontal-edge points, then
/// vertical-edge points. Along a grid line, position p counts sub-steps, so
/// node k of the line sits at p = k * m.
struct Lattice {
  Grid grid;
  int m = 4;

  Lattice() = default;
  Lattice(Grid g, int samples_per_edge);

  int size() const;
  int nodes() const { return grid.size(); }
  int row_length() const { return (grid.nu - 1) * m + 1; }
  int col_length() const { return (grid.nv - 1) * m + 1; }
  /// Point at position p along row j (u direction).
  int row_point(int j, int p) const;
  /// Point at position p along column i (v direction).
  int col_point(int i, int p) const;
  Vec2 point(int idx) const;
  bool is_node(int idx) const { return idx < nodes(); }
};

/// Jets of a map R^2 -> R^4 at every lattice point.
struct LatticeJets {
  Lattice lat;
  int order = 0;
  bool fd = false;  // derivatives from grid differences
  std::vector<JetVec4> jets;
  std::vector<std::uint8_t> valid;

  Vec4 value(int idx) const { return jet_value(jets[idx]); }
  std::vector<Vec4> node_values() const;
  std::vector<std::uint8_t> node_valid() const {
    return {valid.begin(), valid.begin() + lat.nodes()};
  }
};

/// Samples a map at every lattice point (order capped by what the map provides).
LatticeJets sample_map(const VecMap& map, const Lattice& lat, int order,
                       const FDConfig& fd = FDConfig{});

/// Order-2 jets built from node values alone: fourth-order grid differences
/// at the nodes, cubic interpolation along grid lines for the sub-points.
LatticeJets from_nodes(const Lattice& lat, const std::vector<Vec4>& values,
                       const std::vector<std::uint8_t>& valid);

/// sum_k coeff_k * field_k; zero coefficients are skipped entirely.
LatticeJets combine(const std::vector<std::pair<double, const LatticeJets*>>& terms);

/// Order-2 data of an immersion at one point, enough for the connection.
struct Connection {
  Mat42 X = Mat42::Zero();  // x_u, x_v
  Mat2 ginv = Mat2::Identity();
  std::array<Vec4, 3> alpha{Vec4::Zero(), Vec4::Zero(), Vec4::Zero()};  // uu, uv, vv

  Vec4 xd(int dir) const { return X.col(dir); }
  const Vec4& alpha_dk(int d, int k) const { return alpha[d + k]; }
  /// Chart components of a vector's tangent part.
  Vec2 components(const Vec4& s) const { return ginv * (X.transpose() * s); }
  Vec4 tangent_part(const Vec4& s) const { return X * components(s); }
  Vec4 normal_part(const Vec4& s) const { return s - tangent_part(s); }
};
Connection connection_at(const JetVec4& x);

/// Connection data over a lattice; points are valid where x is a rank-2 immersion.
struct LatticeGeometry {
  Lattice lat;
  std::vector<Connection> conn;
  std::vector<std::uint8_t> valid;
};
LatticeGeometry lattice_geometry(const LatticeJets& x, double rank_tol);

/// Right-hand side d(state)/d(chart parameter) along direction dir (0 = u, 1 = v).
template <int N>
using LineRhs = std::function<Eigen::Matrix<double, N, 1>(const Connection&, int dir,
                                                          const Eigen::Matrix<double, N, 1>&)>;

/// Result of integrating an ODE over the lattice along staircase paths.
template <int N>
struct LatticeSolution {
  std::vector<Eigen::Matrix<double, N, 1>> state;
  std::vector<std::uint8_t> valid;
  int base = 0;
};

/// Nearest node to `p` (by chart distance) among those flagged valid.
std::optional<int> nearest_valid_node(const Grid& grid, const std::vector<std::uint8_t>& valid,
                                      const Vec2& p);

/// Classical RK4 over two lattice sub-steps at a time, with Hermite values at
/// the odd positions. Integrates from position p0 to p1 on a line (row j when
/// dir = 0, column i when dir = 1). `visit(idx, state)` sees every point
/// after p0. Stops (returning false) at the first invalid point.
template <int N>
bool integrate_line(const LatticeGeometry& g, int dir, int line, int p0, int p1,
                    Eigen::Matrix<double, N, 1> state, const LineRhs<N>& rhs,
                    const std::function<void(int, const Eigen::Matrix<double, N, 1>&)>& visit);

/// Base row first, then every column, then the remaining horizontal edges
/// (from their left node) so sub-points on all lines carry values.
template <int N>
LatticeSolution<N> solve_staircase(const LatticeGeometry& g, int base_node,
                                   const Eigen::Matrix<double, N, 1>& initial,
                                   const LineRhs<N>& rhs);

// ---------------------------------------------------------------------------

template <int N>
bool integrate_line(const LatticeGeometry& g, int dir, int line, int p0, int p1,
                    Eigen::Matrix<double, N, 1> y, const LineRhs<N>& rhs,
                    const std::function<void(int, const Eigen::Matrix<double, N, 1>&)>& visit) {
  using V = Eigen::Matrix<double, N, 1>;
  const Lattice& lat = g.lat;
  auto at = [&](int p) { return dir == 0 ? lat.row_point(line, p) : lat.col_point(line, p); };
  const double spacing = (dir == 0 ? lat.grid.hu() : lat.grid.hv()) / lat.m;
  const int step = p1 > p0 ? 2 : -2;
  const double h = step * spacing;
  if (!g.valid[at(p0)]) return false;
  V f0 = rhs(g.conn[at(p0)], dir, y);
  for (int p = p0; p != p1; p += step) {
    const int mid = at(p + step / 2), end = at(p + step);
    if (!g.valid[mid] || !g.valid[end]) return false;
    const Connection& cm = g.conn[mid];
    const V k2 = rhs(cm, dir, y + 0.5 * h * f0);
    const V k3 = rhs(cm, dir, y + 0.5 * h * k2);
    const V k4 = rhs(g.conn[end], dir, y + h * k3);
    const V y1 = y + (h / 6.0) * (f0 + 2.0 * k2 + 2.0 * k3 + k4);
    const V f1 = rhs(g.conn[end], dir, y1);
    visit(mid, V(0.5 * (y + y1) + (h / 8.0) * (f0 - f1)));
    visit(end, y1);
    y = y1;
    f0 = f1;
  }
  return true;
}

template <int N>
LatticeSolution<N> solve_staircase(const LatticeGeometry& g, int base_node,
                                   const Eigen::Matrix<double, N, 1>& initial,
                                   const LineRhs<N>& rhs) {
  using V = Eigen::Matrix<double, N, 1>;
  const Lattice& lat = g.lat;
  const Grid& grid = lat.grid;
  LatticeSolution<N> sol;
  sol.state.assign(lat.size(), V::Zero());
  sol.valid.assign(lat.size(), 0);
  sol.base = base_node;
  if (!g.valid[base_node]) return sol;
  auto store = [&](int idx, const V& s) {
    sol.state[idx] = s;
    sol.valid[idx] = 1;
  };
  const int ib = base_node % grid.nu, jb = base_node / grid.nu;
  store(base_node, initial);

  // Nodes are only accepted once the whole edge leading to them succeeded.
  auto run_edges = [&](int dir, int line, int k0, int k_end, const V& start) {
    const int dk = k_end > k0 ? 1 : -1;
    V y = start;
    for (int k = k0; k != k_end; k += dk) {
      std::vector<std::pair<int, V>> pending;
      V last = y;
      const bool ok = integrate_line<N>(g, dir, line, k * lat.m, (k + dk) * lat.m, y, rhs,
                                        [&](int idx, const V& s) {
                                          pending.emplace_back(idx, s);
                                          last = s;
                                        });
      if (!ok) return;
      for (const auto& [idx, s] : pending) store(idx, s);
      y = last;
    }
  };
  run_edges(0, jb, ib, grid.nu - 1, initial);
  run_edges(0, jb, ib, 0, initial);
  for (int i = 0; i < grid.nu; ++i) {
    const int n = grid.index(i, jb);
    if (!sol.valid[n]) continue;
    run_edges(1, i, jb, grid.nv - 1, sol.state[n]);
    run_edges(1, i, jb, 0, sol.state[n]);
  }
  for (int j = 0; j < grid.nv; ++j) {
    if (j == jb) continue;
    for (int i = 0; i + 1 < grid.nu; ++i) {
      const int a = grid.index(i, j), b = grid.index(i + 1, j);
      if (!sol.valid[a] || !sol.valid[b]) continue;
      std::vector<std::pair<int, V>> pending;
      const bool ok = integrate_line<N>(
          g, 0, j, i * lat.m, (i + 1) * lat.m, sol.state[a], rhs,
          [&](int idx, const V& s) {
            if (idx != b) pending.emplace_back(idx, s);
          });
      if (ok) {
        for (const auto& [idx, s] : pending) store(idx, s);
      }
    }
  }
  return sol;
}

}  // namespace r4surf
