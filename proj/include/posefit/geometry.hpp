#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "posefit/skeleton.hpp"

namespace posefit {

struct Capsule {
  Point3 a;
  Point3 b;
  double radius = 0.0;
};

namespace detail {

// Every distance path in the library goes through these scalar expressions with a
// fixed evaluation order, so reorganized loops reproduce the naive scan bit-for-bit.
inline double dot3(double ax, double ay, double az, double bx, double by, double bz) {
  return ax * bx + ay * by + az * bz;
}

/// Clamped closest-point parameter on a + t*ab for a non-degenerate segment (ab2 > 0).
inline double segment_param_proper(double px, double py, double pz, double ax, double ay, double az,
                                   double abx, double aby, double abz, double ab2) {
  const double t = dot3(px - ax, py - ay, pz - az, abx, aby, abz) / ab2;
  return std::min(std::max(t, 0.0), 1.0);
}

/// Parameter of the closest point on a + t*ab, with ab2 = |ab|^2 precomputed.
inline double segment_param(double px, double py, double pz, double ax, double ay, double az,
                            double abx, double aby, double abz, double ab2) {
  if (ab2 == 0.0) return 0.0;
  return segment_param_proper(px, py, pz, ax, ay, az, abx, aby, abz, ab2);
}

/// Signed surface distance |p - (a + t*ab)| - r; negative inside the capsule.
inline double gap_at(double px, double py, double pz, double ax, double ay, double az, double abx,
                     double aby, double abz, double t, double r) {
  const double dx = px - (ax + t * abx);
  const double dy = py - (ay + t * aby);
  const double dz = pz - (az + t * abz);
  return std::sqrt(dot3(dx, dy, dz, dx, dy, dz)) - r;
}

inline double capsule_gap(double px, double py, double pz, double ax, double ay, double az,
                          double abx, double aby, double abz, double ab2, double r) {
  const double t = segment_param(px, py, pz, ax, ay, az, abx, aby, abz, ab2);
  return gap_at(px, py, pz, ax, ay, az, abx, aby, abz, t, r);
}

}  // namespace detail

Point3 closest_point_on_segment(const Point3& p, const Point3& a, const Point3& b);

/// Distance to the capsule surface; zero on or inside the capsule.
double distance_to_capsule(const Point3& p, const Capsule& c);

struct ModelDistance {
  double distance = 0.0;
  int link_id = 0;
};

/// Exhaustive scan over all links; ties go to the smallest link id.
/// Throws InvalidInput for an empty model.
ModelDistance distance_to_model(const Point3& p, const PosedModel& model);

inline Capsule capsule_of(const Segment& s) { return {s.start, s.end, s.radius}; }

}  // namespace posefit
