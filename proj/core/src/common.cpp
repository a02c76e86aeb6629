#include "uturn/common.hpp"

#include <cmath>

namespace uturn {

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

ParseError::ParseError(const std::string& what, std::size_t line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

}  // namespace uturn
