#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace v2x {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
  constexpr double& operator[](int axis) { return axis == 0 ? x : axis == 1 ? y : z; }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a * s; }
  friend constexpr bool operator==(Vec3, Vec3) = default;
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline double distance(Vec3 a, Vec3 b) { return norm(b - a); }

inline Vec3 normalized(Vec3 a) {
  const double n = norm(a);
  return n > 0.0 ? a * (1.0 / n) : a;
}

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Reduce to [0, period).
inline double wrap_positive(double value, double period) {
  double r = std::fmod(value, period);
  if (r < 0.0) r += period;
  if (r >= period) r = 0.0;
  return r;
}

// Azimuth in degrees, [0, 360), measured counter-clockwise from +x.
inline double azimuth_deg(Vec3 dir) {
  if (dir.x == 0.0 && dir.y == 0.0) return 0.0;
  return wrap_positive(rad_to_deg(std::atan2(dir.y, dir.x)), 360.0);
}

// Zenith angle in degrees, [0, 180]: 0 points straight up, 90 is horizontal.
inline double zenith_deg(Vec3 dir) {
  const double n = norm(dir);
  if (n == 0.0) return 90.0;
  return rad_to_deg(std::acos(std::clamp(dir.z / n, -1.0, 1.0)));
}

// Unit vector for an (azimuth, zenith) pair in degrees.
inline Vec3 direction_from_angles(double az_deg, double zenith_deg_value) {
  const double az = deg_to_rad(az_deg);
  const double ze = deg_to_rad(zenith_deg_value);
  return {std::sin(ze) * std::cos(az), std::sin(ze) * std::sin(az), std::cos(ze)};
}

// Axis-aligned box, closed on both ends.
struct Box {
  Vec3 lo;
  Vec3 hi;

  bool contains(Vec3 p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
           p.z <= hi.z;
  }
};

// Does the segment a->b pass through the interior of `box`? The box is shrunk
// by `eps` on every side, so segments that touch or slide along a face do not
// count. This is what lets a reflection point sit exactly on a wall.
inline bool segment_crosses_interior(Vec3 a, Vec3 b, const Box& box, double eps = 1e-7) {
  const Vec3 d = b - a;
  double t_enter = 0.0;
  double t_exit = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = box.lo[axis] + eps;
    const double hi = box.hi[axis] - eps;
    if (lo >= hi) return false;
    if (std::abs(d[axis]) < 1e-15) {
      if (a[axis] <= lo || a[axis] >= hi) return false;
      continue;
    }
    double t0 = (lo - a[axis]) / d[axis];
    double t1 = (hi - a[axis]) / d[axis];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
    if (t_enter >= t_exit) return false;
  }
  return t_enter < t_exit;
}

}  // namespace v2x
