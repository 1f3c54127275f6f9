#pragma once

#include <array>
#include <functional>
#include <vector>

#include "r4surf/types.hpp"

namespace r4surf {

/// Truncated Taylor expansion of a scalar function of (u, v) at a base point.
///
/// Coefficient (i, j) holds d^{i+j} f / du^i dv^j / (i! j!). Storage is
/// ordered by total degree, so truncating to a lower order is a prefix.
class Jet2 {
 public:
  static constexpr int kMaxOrder = 4;
  static constexpr int kMaxCoeffs = (kMaxOrder + 1) * (kMaxOrder + 2) / 2;

  explicit Jet2(int order = 0);

  static Jet2 constant(double value, int order);
  /// Jet of the coordinate function u at base value u0.
  static Jet2 variable_u(double u0, int order);
  static Jet2 variable_v(double v0, int order);

  static constexpr int index(int i, int j) { return (i + j) * (i + j + 1) / 2 + j; }
  static constexpr int size_for(int order) { return (order + 1) * (order + 2) / 2; }

  int order() const { return order_; }
  int size() const { return size_for(order_); }

  double operator()(int i, int j) const { return c_[index(i, j)]; }
  double& operator()(int i, int j) { return c_[index(i, j)]; }
  double value() const { return c_[0]; }
  /// Partial derivative d^{i+j} f / du^i dv^j at the base point.
  double derivative(int i, int j) const;

  const double* data() const { return c_.data(); }
  double* data() { return c_.data(); }

  Jet2 d_du() const;
  Jet2 d_dv() const;
  Jet2 truncated(int order) const;
  /// Evaluates the truncated polynomial at offset (du, dv) from the base point.
  double evaluate(double du, double dv) const;

  Jet2& operator+=(const Jet2& b);
  Jet2& operator-=(const Jet2& b);
  Jet2& operator*=(double s);

 private:
  int order_;
  std::array<double, kMaxCoeffs> c_{};
};

enum class JetOp { kAdd, kSub, kMul, kDiv };
enum class JetFn { kSin, kCos, kExp, kLog, kSinh, kCosh, kSqrt, kPow };

Jet2 jet_binary(const Jet2& a, const Jet2& b, JetOp kind);
/// `exponent` is only read for kPow.
Jet2 jet_elementary(const Jet2& a, JetFn kind, double exponent = 0.0);

Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a, const Jet2& b);
Jet2 operator*(const Jet2& a, const Jet2& b);
Jet2 operator/(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a);
Jet2 operator+(const Jet2& a, double s);
Jet2 operator+(double s, const Jet2& a);
Jet2 operator-(const Jet2& a, double s);
Jet2 operator-(double s, const Jet2& a);
Jet2 operator*(const Jet2& a, double s);
Jet2 operator*(double s, const Jet2& a);
Jet2 operator/(const Jet2& a, double s);
Jet2 operator/(double s, const Jet2& a);

Jet2 sin(const Jet2& a);
Jet2 cos(const Jet2& a);
Jet2 exp(const Jet2& a);
Jet2 log(const Jet2& a);
Jet2 sinh(const Jet2& a);
Jet2 cosh(const Jet2& a);
Jet2 sqrt(const Jet2& a);
Jet2 pow(const Jet2& a, double r);

/// Four coordinate jets of a map into R^4.
using JetVec4 = std::array<Jet2, 4>;

Vec4 jet_value(const JetVec4& x);
/// Partial derivative vector d^{i+j} x / du^i dv^j.
Vec4 jet_derivative(const JetVec4& x, int i, int j);
Jet2 dot(const JetVec4& a, const JetVec4& b);
JetVec4 d_du(const JetVec4& x);
JetVec4 d_dv(const JetVec4& x);
JetVec4 scaled(const JetVec4& x, const Jet2& s);
JetVec4 operator+(const JetVec4& a, const JetVec4& b);
JetVec4 operator-(const JetVec4& a, const JetVec4& b);
JetVec4 operator*(double s, const JetVec4& a);
JetVec4 constant_jets(const Vec4& v, int order);
JetVec4 truncated(const JetVec4& x, int order);

// ---------------------------------------------------------------------------
// Finite differences

struct FDConfig {
  double step = 1e-4;
  int richardson_levels = 2;
};

void validate(const FDConfig& cfg);

/// Central-difference jets (order <= 2) of a map R^2 -> R^m.
///
/// Level k uses step * 2^k; the levels are combined by Richardson
/// extrapolation in powers of step^2. When the stencil does not fit inside
/// `domain` the step shrinks until it does; a base point outside the domain
/// (or on its edge) throws "stencil out of bounds".
std::vector<Jet2> fd_jet(const std::function<Eigen::VectorXd(const Vec2&)>& map,
                         const Vec2& at, int order, const FDConfig& cfg,
                         const Domain& domain = Domain{});

/// Convenience overload for maps into R^4.
JetVec4 fd_jet4(const std::function<Vec4(const Vec2&)>& map, const Vec2& at, int order,
                const FDConfig& cfg, const Domain& domain = Domain{});

}  // namespace r4surf
