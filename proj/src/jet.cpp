#include "r4surf/jet.hpp"

#include <cmath>

namespace r4surf {

namespace {

constexpr double kFactorial[] = {1.0, 1.0, 2.0, 6.0, 24.0, 120.0};

void check_order(int order) {
  if (order < 0 || order > Jet2::kMaxOrder) {
    throw JetError("jet order out of range: " + std::to_string(order));
  }
}

// Composition f(a) from the derivatives f^(k)(a0), k = 0..order.
Jet2 compose(const Jet2& a, const std::array<double, Jet2::kMaxOrder + 1>& df) {
  const int n = a.order();
  Jet2 h = a;
  h(0, 0) = 0.0;
  Jet2 out = Jet2::constant(df[0], n);
  Jet2 power = Jet2::constant(1.0, n);
  for (int k = 1; k <= n; ++k) {
    power = power * h;
    const double w = df[k] / kFactorial[k];
    if (w == 0.0) continue;
    for (int idx = 0; idx < out.size(); ++idx) out.data()[idx] += w * power.data()[idx];
  }
  return out;
}

bool is_integer(double r) { return std::floor(r) == r && std::abs(r) < 1e15; }

}  // namespace

Jet2::Jet2(int order) : order_(order) { check_order(order); }

Jet2 Jet2::constant(double value, int order) {
  Jet2 j(order);
  j.c_[0] = value;
  return j;
}

Jet2 Jet2::variable_u(double u0, int order) {
  Jet2 j = constant(u0, order);
  if (order >= 1) j(1, 0) = 1.0;
  return j;
}

Jet2 Jet2::variable_v(double v0, int order) {
  Jet2 j = constant(v0, order);
  if (order >= 1) j(0, 1) = 1.0;
  return j;
}

double Jet2::derivative(int i, int j) const {
  if (i < 0 || j < 0 || i + j > order_) {
    throw JetError("derivative beyond jet order");
  }
  return (*this)(i, j) * kFactorial[i] * kFactorial[j];
}

Jet2 Jet2::d_du() const {
  if (order_ == 0) throw JetError("cannot differentiate an order-0 jet");
  Jet2 out(order_ - 1);
  for (int d = 0; d < order_; ++d) {
    for (int j = 0; j <= d; ++j) {
      const int i = d - j;
      out(i, j) = (i + 1) * (*this)(i + 1, j);
    }
  }
  return out;
}

Jet2 Jet2::d_dv() const {
  if (order_ == 0) throw JetError("cannot differentiate an order-0 jet");
  Jet2 out(order_ - 1);
  for (int d = 0; d < order_; ++d) {
    for (int j = 0; j <= d; ++j) {
      const int i = d - j;
      out(i, j) = (j + 1) * (*this)(i, j + 1);
    }
  }
  return out;
}

Jet2 Jet2::truncated(int order) const {
  if (order > order_) throw JetError("cannot raise jet order by truncation");
  Jet2 out(order);
  for (int k = 0; k < out.size(); ++k) out.c_[k] = c_[k];
  return out;
}

double Jet2::evaluate(double du, double dv) const {
  double sum = 0.0;
  for (int d = order_; d >= 0; --d) {
    for (int j = 0; j <= d; ++j) {
      const int i = d - j;
      sum += (*this)(i, j) * std::pow(du, i) * std::pow(dv, j);
    }
  }
  return sum;
}

Jet2& Jet2::operator+=(const Jet2& b) {
  if (b.order_ < order_) *this = truncated(b.order_);
  for (int k = 0; k < size(); ++k) c_[k] += b.c_[k];
  return *this;
}

Jet2& Jet2::operator-=(const Jet2& b) {
  if (b.order_ < order_) *this = truncated(b.order_);
  for (int k = 0; k < size(); ++k) c_[k] -= b.c_[k];
  return *this;
}

Jet2& Jet2::operator*=(double s) {
  for (int k = 0; k < size(); ++k) c_[k] *= s;
  return *this;
}

// Mixed-order operands combine at the lower order.
Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 out = a.order() <= b.order() ? a : a.truncated(b.order());
  out += b;
  return out;
}

Jet2 operator-(const Jet2& a, const Jet2& b) {
  Jet2 out = a.order() <= b.order() ? a : a.truncated(b.order());
  out -= b;
  return out;
}

Jet2 operator*(const Jet2& a, const Jet2& b) {
  const int n = std::min(a.order(), b.order());
  Jet2 out(n);
  for (int d = 0; d <= n; ++d) {
    for (int j = 0; j <= d; ++j) {
      const int i = d - j;
      double s = 0.0;
      for (int p = 0; p <= i; ++p) {
        for (int q = 0; q <= j; ++q) s += a(p, q) * b(i - p, j - q);
      }
      out(i, j) = s;
    }
  }
  return out;
}

Jet2 operator/(const Jet2& a, const Jet2& b) {
  const double b0 = b.value();
  if (std::abs(b0) < 1e-300) throw JetError("jet division by zero");
  std::array<double, Jet2::kMaxOrder + 1> df{};
  double p = 1.0 / b0;
  for (int k = 0; k <= Jet2::kMaxOrder; ++k) {
    df[k] = ((k % 2) ? -1.0 : 1.0) * kFactorial[k] * p;
    p /= b0;
  }
  return a * compose(b, df);
}

Jet2 operator-(const Jet2& a) {
  Jet2 out = a;
  out *= -1.0;
  return out;
}

Jet2 operator+(const Jet2& a, double s) {
  Jet2 out = a;
  out(0, 0) += s;
  return out;
}
Jet2 operator+(double s, const Jet2& a) { return a + s; }
Jet2 operator-(const Jet2& a, double s) { return a + (-s); }
Jet2 operator-(double s, const Jet2& a) { return (-a) + s; }
Jet2 operator*(const Jet2& a, double s) {
  Jet2 out = a;
  out *= s;
  return out;
}
Jet2 operator*(double s, const Jet2& a) { return a * s; }
Jet2 operator/(const Jet2& a, double s) {
  if (std::abs(s) < 1e-300) throw JetError("jet division by zero");
  return a * (1.0 / s);
}
Jet2 operator/(double s, const Jet2& a) { return Jet2::constant(s, a.order()) / a; }

Jet2 jet_binary(const Jet2& a, const Jet2& b, JetOp kind) {
  switch (kind) {
    case JetOp::kAdd: return a + b;
    case JetOp::kSub: return a - b;
    case JetOp::kMul: return a * b;
    case JetOp::kDiv: return a / b;
  }
  throw JetError("unknown jet operation");
}

Jet2 jet_elementary(const Jet2& a, JetFn kind, double exponent) {
  const double x = a.value();
  std::array<double, Jet2::kMaxOrder + 1> df{};
  switch (kind) {
    case JetFn::kSin:
    case JetFn::kCos: {
      const double s = std::sin(x), c = std::cos(x);
      const std::array<double, 4> cyc = kind == JetFn::kSin
                                            ? std::array<double, 4>{s, c, -s, -c}
                                            : std::array<double, 4>{c, -s, -c, s};
      for (int k = 0; k <= Jet2::kMaxOrder; ++k) df[k] = cyc[k % 4];
      break;
    }
    case JetFn::kExp:
      df.fill(std::exp(x));
      break;
    case JetFn::kSinh:
    case JetFn::kCosh: {
      const double s = std::sinh(x), c = std::cosh(x);
      for (int k = 0; k <= Jet2::kMaxOrder; ++k) {
        df[k] = ((k % 2 == 0) == (kind == JetFn::kSinh)) ? s : c;
      }
      break;
    }
    case JetFn::kLog: {
      if (!(x > 0.0)) throw JetError("jet domain error: log of non-positive value");
      df[0] = std::log(x);
      double p = 1.0 / x;
      for (int k = 1; k <= Jet2::kMaxOrder; ++k) {
        df[k] = ((k % 2) ? 1.0 : -1.0) * kFactorial[k - 1] * p;
        p /= x;
      }
      break;
    }
    case JetFn::kSqrt:
      exponent = 0.5;
      [[fallthrough]];
    case JetFn::kPow: {
      const double r = exponent;
      const bool integral = is_integer(r);
      if (x < 0.0 && !integral) throw JetError("jet domain error: fractional power of negative value");
      if (x == 0.0) {
        const bool smooth = integral && r >= 0.0;
        if (!smooth && (a.order() > 0 || r < 0.0)) {
          throw JetError("jet domain error: power not differentiable at zero");
        }
      }
      double falling = 1.0;  // r (r-1) ... (r-k+1)
      for (int k = 0; k <= Jet2::kMaxOrder; ++k) {
        if (k > 0) falling *= (r - (k - 1));
        df[k] = falling == 0.0 ? 0.0 : falling * std::pow(x, r - k);
      }
      break;
    }
  }
  return compose(a, df);
}

Jet2 sin(const Jet2& a) { return jet_elementary(a, JetFn::kSin); }
Jet2 cos(const Jet2& a) { return jet_elementary(a, JetFn::kCos); }
Jet2 exp(const Jet2& a) { return jet_elementary(a, JetFn::kExp); }
Jet2 log(const Jet2& a) { return jet_elementary(a, JetFn::kLog); }
Jet2 sinh(const Jet2& a) { return jet_elementary(a, JetFn::kSinh); }
Jet2 cosh(const Jet2& a) { return jet_elementary(a, JetFn::kCosh); }
Jet2 sqrt(const Jet2& a) { return jet_elementary(a, JetFn::kSqrt); }
Jet2 pow(const Jet2& a, double r) { return jet_elementary(a, JetFn::kPow, r); }

Vec4 jet_value(const JetVec4& x) {
  return Vec4(x[0].value(), x[1].value(), x[2].value(), x[3].value());
}

Vec4 jet_derivative(const JetVec4& x, int i, int j) {
  return Vec4(x[0].derivative(i, j), x[1].derivative(i, j), x[2].derivative(i, j),
              x[3].derivative(i, j));
}

Jet2 dot(const JetVec4& a, const JetVec4& b) {
  Jet2 s = a[0] * b[0];
  for (int k = 1; k < 4; ++k) s += a[k] * b[k];
  return s;
}

JetVec4 d_du(const JetVec4& x) { return {x[0].d_du(), x[1].d_du(), x[2].d_du(), x[3].d_du()}; }
JetVec4 d_dv(const JetVec4& x) { return {x[0].d_dv(), x[1].d_dv(), x[2].d_dv(), x[3].d_dv()}; }

JetVec4 scaled(const JetVec4& x, const Jet2& s) {
  return {x[0] * s, x[1] * s, x[2] * s, x[3] * s};
}

JetVec4 operator+(const JetVec4& a, const JetVec4& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}

JetVec4 operator-(const JetVec4& a, const JetVec4& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}

JetVec4 operator*(double s, const JetVec4& a) { return {a[0] * s, a[1] * s, a[2] * s, a[3] * s}; }

JetVec4 constant_jets(const Vec4& v, int order) {
  return {Jet2::constant(v[0], order), Jet2::constant(v[1], order), Jet2::constant(v[2], order),
          Jet2::constant(v[3], order)};
}

JetVec4 truncated(const JetVec4& x, int order) {
  return {x[0].truncated(order), x[1].truncated(order), x[2].truncated(order),
          x[3].truncated(order)};
}

}  // namespace r4surf
