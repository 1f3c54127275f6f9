#include "r4surf/lattice.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SVD>

namespace r4surf {

Lattice::Lattice(Grid g, int samples_per_edge) : grid(std::move(g)), m(samples_per_edge) {
  if (m < 2 || m % 2 != 0) throw ConfigError("lattice needs an even number of samples per edge");
}

int Lattice::size() const {
  return grid.size() + (m - 1) * ((grid.nu - 1) * grid.nv + grid.nu * (grid.nv - 1));
}

int Lattice::row_point(int j, int p) const {
  const int i = p / m, s = p % m;
  if (s == 0) return grid.index(i, j);
  return grid.size() + (j * (grid.nu - 1) + i) * (m - 1) + (s - 1);
}

int Lattice::col_point(int i, int p) const {
  const int j = p / m, s = p % m;
  if (s == 0) return grid.index(i, j);
  const int h_total = (m - 1) * (grid.nu - 1) * grid.nv;
  return grid.size() + h_total + (j * grid.nu + i) * (m - 1) + (s - 1);
}

Vec2 Lattice::point(int idx) const {
  if (idx < grid.size()) return grid.node(idx);
  int r = idx - grid.size();
  const int h_total = (m - 1) * (grid.nu - 1) * grid.nv;
  if (r < h_total) {
    const int edge = r / (m - 1), s = r % (m - 1) + 1;
    const int i = edge % (grid.nu - 1), j = edge / (grid.nu - 1);
    return grid.node(i, j) + Vec2(grid.hu() * s / m, 0.0);
  }
  r -= h_total;
  const int edge = r / (m - 1), s = r % (m - 1) + 1;
  const int i = edge % grid.nu, j = edge / grid.nu;
  return grid.node(i, j) + Vec2(0.0, grid.hv() * s / m);
}

std::vector<Vec4> LatticeJets::node_values() const {
  std::vector<Vec4> out(lat.nodes());
  for (int k = 0; k < lat.nodes(); ++k) out[k] = jet_value(jets[k]);
  return out;
}

LatticeJets sample_map(const VecMap& map, const Lattice& lat, int order, const FDConfig& fd) {
  LatticeJets out;
  out.lat = lat;
  out.order = std::min(order, std::max(map.analytic_order(), 2));
  out.jets.assign(lat.size(), constant_jets(Vec4::Zero(), out.order));
  out.valid.assign(lat.size(), 0);
  for (int k = 0; k < lat.size(); ++k) {
    try {
      out.jets[k] = map.jets(lat.point(k), out.order, fd);
      bool finite = true;
      for (const Jet2& c : out.jets[k]) {
        for (int q = 0; q < c.size(); ++q) finite = finite && std::isfinite(c.data()[q]);
      }
      out.valid[k] = finite;
    } catch (const Error&) {
      out.valid[k] = 0;
    }
  }
  return out;
}

namespace {

using OptVec = std::optional<Vec4>;

// Derivative along one grid axis of a node quantity, fourth-order where possible.
std::vector<OptVec> axis_derivative(const Grid& grid, const std::vector<OptVec>& f, int dir) {
  std::vector<OptVec> out(f.size());
  for (int j = 0; j < grid.nv; ++j) {
    for (int i = 0; i < grid.nu; ++i) {
      if (!f[grid.index(i, j)]) continue;
      if (dir == 0) {
        out[grid.index(i, j)] = line_derivative<Vec4>(
            [&](int k) { return f[grid.index(k, j)]; }, i, grid.nu, grid.hu());
      } else {
        out[grid.index(i, j)] = line_derivative<Vec4>(
            [&](int k) { return f[grid.index(i, k)]; }, j, grid.nv, grid.hv());
      }
    }
  }
  return out;
}

// Lagrange weights for nodes at -1, 0, 1, 2 evaluated at x in (0, 1).
std::array<double, 4> cubic_weights(double x) {
  return {-x * (x - 1) * (x - 2) / 6.0, (x + 1) * (x - 1) * (x - 2) / 2.0,
          -(x + 1) * x * (x - 2) / 2.0, (x + 1) * x * (x - 1) / 6.0};
}

}  // namespace

LatticeJets from_nodes(const Lattice& lat, const std::vector<Vec4>& values,
                       const std::vector<std::uint8_t>& valid) {
  const Grid& grid = lat.grid;
  std::vector<OptVec> f(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    if (valid[k]) f[k] = values[k];
  }
  const auto fu = axis_derivative(grid, f, 0), fv = axis_derivative(grid, f, 1);
  const auto fuu = axis_derivative(grid, fu, 0), fvv = axis_derivative(grid, fv, 1);
  const auto fuv = axis_derivative(grid, fu, 1), fvu = axis_derivative(grid, fv, 0);

  // Per node: value, d_u, d_v, d_uu, d_uv, d_vv.
  using Pack = std::array<Vec4, 6>;
  std::vector<std::optional<Pack>> node(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    if (!f[k] || !fu[k] || !fv[k] || !fuu[k] || !fvv[k]) continue;
    Vec4 mixed;
    if (fuv[k] && fvu[k]) {
      mixed = 0.5 * (*fuv[k] + *fvu[k]);
    } else if (fuv[k] || fvu[k]) {
      mixed = fuv[k] ? *fuv[k] : *fvu[k];
    } else {
      continue;
    }
    node[k] = Pack{*f[k], *fu[k], *fv[k], *fuu[k], mixed, *fvv[k]};
  }
  auto to_jets = [](const Pack& p) {
    JetVec4 x;
    for (int c = 0; c < 4; ++c) {
      Jet2 s(2);
      s(0, 0) = p[0][c];
      s(1, 0) = p[1][c];
      s(0, 1) = p[2][c];
      s(2, 0) = 0.5 * p[3][c];
      s(1, 1) = p[4][c];
      s(0, 2) = 0.5 * p[5][c];
      x[c] = s;
    }
    return x;
  };

  LatticeJets out;
  out.lat = lat;
  out.order = 2;
  out.fd = true;
  out.jets.assign(lat.size(), constant_jets(Vec4::Zero(), 2));
  out.valid.assign(lat.size(), 0);
  for (int k = 0; k < grid.size(); ++k) {
    if (node[k]) {
      out.jets[k] = to_jets(*node[k]);
      out.valid[k] = 1;
    }
  }
  // Sub-points: cubic interpolation of the packed node data along each line.
  auto fill_line = [&](int dir, int line, int count) {
    auto node_at = [&](int k) { return dir == 0 ? grid.index(k, line) : grid.index(line, k); };
    for (int k = 0; k + 1 < count; ++k) {
      if (!node[node_at(k)] || !node[node_at(k + 1)]) continue;
      int first = k - 1;
      if (first < 0) first = 0;
      if (first + 3 >= count) first = count - 4;
      bool ok = first >= 0;
      for (int q = 0; ok && q < 4; ++q) ok = node[node_at(first + q)].has_value();
      for (int s = 1; s < lat.m; ++s) {
        const int idx = dir == 0 ? lat.row_point(line, k * lat.m + s)
                                 : lat.col_point(line, k * lat.m + s);
        const double x = static_cast<double>(s) / lat.m;
        Pack p{};
        if (ok) {
          const auto w = cubic_weights(x + (k - first) - 1.0);
          for (int c = 0; c < 6; ++c) {
            p[c] = Vec4::Zero();
            for (int q = 0; q < 4; ++q) p[c] += w[q] * (*node[node_at(first + q)])[c];
          }
        } else {
          for (int c = 0; c < 6; ++c) {
            p[c] = (1 - x) * (*node[node_at(k)])[c] + x * (*node[node_at(k + 1)])[c];
          }
        }
        out.jets[idx] = to_jets(p);
        out.valid[idx] = 1;
      }
    }
  };
  for (int j = 0; j < grid.nv; ++j) fill_line(0, j, grid.nu);
  for (int i = 0; i < grid.nu; ++i) fill_line(1, i, grid.nv);
  return out;
}

LatticeJets combine(const std::vector<std::pair<double, const LatticeJets*>>& terms) {
  std::vector<std::pair<double, const LatticeJets*>> live;
  for (const auto& t : terms) {
    if (t.first != 0.0) live.push_back(t);
  }
  if (live.empty()) throw Error("combine needs at least one nonzero term");
  LatticeJets out;
  out.lat = live.front().second->lat;
  out.order = Jet2::kMaxOrder;
  for (const auto& t : live) {
    out.order = std::min(out.order, t.second->order);
    out.fd = out.fd || t.second->fd;
  }
  const int n = out.lat.size();
  out.jets.resize(n);
  out.valid.assign(n, 1);
  for (int k = 0; k < n; ++k) {
    JetVec4 sum = live.front().first * truncated(live.front().second->jets[k], out.order);
    bool ok = live.front().second->valid[k];
    for (std::size_t q = 1; q < live.size(); ++q) {
      sum = sum + live[q].first * truncated(live[q].second->jets[k], out.order);
      ok = ok && live[q].second->valid[k];
    }
    out.jets[k] = sum;
    out.valid[k] = ok;
  }
  return out;
}

Connection connection_at(const JetVec4& x) {
  Connection c;
  c.X << jet_derivative(x, 1, 0), jet_derivative(x, 0, 1);
  const Mat2 g = c.X.transpose() * c.X;
  c.ginv = g.inverse();
  const Vec4 second[3] = {jet_derivative(x, 2, 0), jet_derivative(x, 1, 1),
                          jet_derivative(x, 0, 2)};
  for (int q = 0; q < 3; ++q) c.alpha[q] = c.normal_part(second[q]);
  return c;
}

LatticeGeometry lattice_geometry(const LatticeJets& x, double rank_tol) {
  if (x.order < 2) throw GeometryError("connection needs jets of order >= 2");
  LatticeGeometry g;
  g.lat = x.lat;
  g.conn.resize(x.lat.size());
  g.valid.assign(x.lat.size(), 0);
  for (int k = 0; k < x.lat.size(); ++k) {
    if (!x.valid[k]) continue;
    Mat42 jac;
    jac << jet_derivative(x.jets[k], 1, 0), jet_derivative(x.jets[k], 0, 1);
    const Vec2 s = Eigen::JacobiSVD<Mat42>(jac).singularValues();
    if (!(s(1) >= rank_tol)) continue;
    g.conn[k] = connection_at(x.jets[k]);
    g.valid[k] = 1;
  }
  return g;
}

std::optional<int> nearest_valid_node(const Grid& grid, const std::vector<std::uint8_t>& valid,
                                      const Vec2& p) {
  std::optional<int> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid.size(); ++k) {
    if (!valid[k]) continue;
    const double d = (grid.node(k) - p).norm();
    if (!best || d < best_d - 1e-12 * (1.0 + best_d)) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

}  // namespace r4surf
