#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace uturn {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

double norm(const Vec3& v);

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when not line-specific.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Precondition or argument violation by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Sensor data unusable for processing (free fall, flat channels, ...).
class QualityError : public Error {
 public:
  using Error::Error;
};

/// A statistic that has no value for the given data (zero variance, ...).
class UndefinedStatistic : public Error {
 public:
  using Error::Error;
};

/// Closed confidence interval.
struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Point estimate with its confidence interval.
struct Estimate {
  double value = 0.0;
  Interval ci;
};

}  // namespace uturn
