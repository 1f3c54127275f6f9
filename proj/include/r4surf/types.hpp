#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace r4surf {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat42 = Eigen::Matrix<double, 4, 2>;

/// Base of every error thrown by the library. Messages are stable and are
/// matched by callers (the CLI maps them to exit codes).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arithmetic on jets left its domain (log of a negative, division by zero).
class JetError : public Error {
 public:
  using Error::Error;
};

/// Malformed expression text; carries the byte offset of the problem.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// A geometric construction is undefined at a point (rank loss, inflection).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration or surface description.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Closed rectangle in the (u, v) chart. Infinite bounds are allowed.
struct Domain {
  double u_min = -std::numeric_limits<double>::infinity();
  double u_max = std::numeric_limits<double>::infinity();
  double v_min = -std::numeric_limits<double>::infinity();
  double v_max = std::numeric_limits<double>::infinity();

  bool contains(const Vec2& p, double slack = 0.0) const {
    return p.x() >= u_min - slack && p.x() <= u_max + slack &&
           p.y() >= v_min - slack && p.y() <= v_max + slack;
  }
  /// Distance from p to the nearest edge (negative when outside).
  double margin(const Vec2& p) const {
    return std::min({p.x() - u_min, u_max - p.x(), p.y() - v_min, v_max - p.y()});
  }
  bool bounded() const {
    return std::isfinite(u_min) && std::isfinite(u_max) && std::isfinite(v_min) &&
           std::isfinite(v_max);
  }
};

}  // namespace r4surf
