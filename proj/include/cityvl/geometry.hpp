#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace cityvl {

// Local metric frame: x = east, y = north, z = up, all in meters.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }

  friend bool operator==(const Point3&, const Point3&) = default;
};

inline Point3 operator-(const Point3& a, const Point3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

inline Point3 operator+(const Point3& a, const Point3& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}

struct Bbox3 {
  Point3 min{std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity()};
  Point3 max{-std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity()};

  void expand(const Point3& p) {
    min.x = std::min(min.x, p.x);
    min.y = std::min(min.y, p.y);
    min.z = std::min(min.z, p.z);
    max.x = std::max(max.x, p.x);
    max.y = std::max(max.y, p.y);
    max.z = std::max(max.z, p.z);
  }

  void expand(const Bbox3& other) {
    expand(other.min);
    expand(other.max);
  }

  bool valid() const { return min.x <= max.x && min.y <= max.y && min.z <= max.z; }

  bool contains(const Point3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }

  // Horizontal (x,y) footprint of `inner` strictly inside this footprint.
  bool footprint_strictly_contains(const Bbox3& inner) const {
    return inner.min.x > min.x && inner.max.x < max.x && inner.min.y > min.y &&
           inner.max.y < max.y;
  }

  double dx() const { return max.x - min.x; }
  double dy() const { return max.y - min.y; }
};

}  // namespace cityvl
