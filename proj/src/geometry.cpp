#include "posefit/geometry.hpp"

#include <algorithm>

#include "posefit/error.hpp"

namespace posefit {

Point3 closest_point_on_segment(const Point3& p, const Point3& a, const Point3& b) {
  const Point3 ab = b - a;
  const double ab2 = detail::dot3(ab.x(), ab.y(), ab.z(), ab.x(), ab.y(), ab.z());
  const double t = detail::segment_param(p.x(), p.y(), p.z(), a.x(), a.y(), a.z(), ab.x(), ab.y(),
                                         ab.z(), ab2);
  return {a.x() + t * ab.x(), a.y() + t * ab.y(), a.z() + t * ab.z()};
}

double distance_to_capsule(const Point3& p, const Capsule& c) {
  const Point3 ab = c.b - c.a;
  const double ab2 = detail::dot3(ab.x(), ab.y(), ab.z(), ab.x(), ab.y(), ab.z());
  const double gap = detail::capsule_gap(p.x(), p.y(), p.z(), c.a.x(), c.a.y(), c.a.z(), ab.x(),
                                         ab.y(), ab.z(), ab2, c.radius);
  return gap > 0.0 ? gap : 0.0;
}

ModelDistance distance_to_model(const Point3& p, const PosedModel& model) {
  if (model.segments.empty()) throw InvalidInput("distance query against an empty model");
  ModelDistance best{distance_to_capsule(p, capsule_of(model.segments.front())),
                     model.segments.front().link_id};
  for (std::size_t i = 1; i < model.segments.size(); ++i) {
    const auto& s = model.segments[i];
    const double d = distance_to_capsule(p, capsule_of(s));
    if (d < best.distance || (d == best.distance && s.link_id < best.link_id)) best = {d, s.link_id};
  }
  return best;
}

}  // namespace posefit
