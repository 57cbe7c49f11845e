#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace flexxnoise {

/// Row-major dense image, templated on scalar so pipelines can pick their
/// precision (frames are stored as float, statistics run in double).
template <class Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using DepthImage = Image<float>;

template <class Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
using Vec3d = Vec3<double>;

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Base for all recoverable toolkit errors (maps to the data/validation
/// exit code in the CLI). Internal bugs use std::logic_error instead.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Inputs outside an operation's mathematical domain.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// Malformed files, inconsistent headers, invariant violations in data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

/// Axis-aligned pixel rectangle, [x0, x0+width) x [y0, y0+height).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;

  bool empty() const { return width <= 0 || height <= 0; }
  int x1() const { return x0 + width; }   // exclusive
  int y1() const { return y0 + height; }  // exclusive

  bool operator==(const PixelRect&) const = default;
};

}  // namespace flexxnoise
