#include <cmath>
#include <cstdint>

#include "posefit/error.hpp"
#include "posefit/syntheval.hpp"

namespace posefit {

void CameraSpec::validate() const {
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0))
    throw InvalidInput("camera focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InvalidInput("camera resolution must be positive");
}

Eigen::Isometry3d CameraSpec::look_at(const Point3& eye, const Point3& target) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (std::abs(forward.dot(up)) > 0.999) up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = r;
  t.translation() = -r * eye;
  return t;
}

std::optional<double> ray_capsule(const Point3& origin, const Point3& dir, const Point3& a,
                                  const Point3& b, double radius) {
  const Point3 ba = b - a;
  const Point3 oa = origin - a;
  const double baba = ba.dot(ba);
  const double bard = ba.dot(dir);
  const double baoa = ba.dot(oa);
  const double rdoa = dir.dot(oa);
  const double oaoa = oa.dot(oa);
  const double r2 = radius * radius;

  std::optional<double> best;
  auto offer = [&](double t) {
    if (t > 0.0 && (!best || t < *best)) best = t;
  };

  // Cylinder body, restricted to the segment's span.
  const double qa = baba - bard * bard;
  if (baba > 0.0 && qa > 1e-14 * baba) {
    const double qb = baba * rdoa - baoa * bard;
    const double qc = baba * oaoa - baoa * baoa - r2 * baba;
    const double h = qb * qb - qa * qc;
    if (h >= 0.0) {
      const double sh = std::sqrt(h);
      for (double t : {(-qb - sh) / qa, (-qb + sh) / qa}) {
        const double y = baoa + t * bard;
        if (y > 0.0 && y < baba) offer(t);
      }
    }
  }
  // End spheres.
  for (const Point3* center : {&a, &b}) {
    const Point3 oc = origin - *center;
    const double hb = dir.dot(oc);
    const double h = hb * hb - (oc.dot(oc) - r2);
    if (h >= 0.0) {
      const double sh = std::sqrt(h);
      offer(-hb - sh);
      offer(-hb + sh);
    }
  }
  return best;
}

std::optional<RayHit> cast_pixel(const PosedModel& camera_model, const Intrinsics& intr, int u, int v) {
  const Point3 ray = intr.back_project(u, v, 1.0);
  const Point3 dir = ray.normalized();
  const Point3 origin = Point3::Zero();
  std::optional<RayHit> hit;
  for (const auto& s : camera_model.segments) {
    const auto t = ray_capsule(origin, dir, s.start, s.end, s.radius);
    if (t && (!hit || *t < hit->t)) hit = RayHit{*t, *t * dir.z(), s.link_id};
  }
  return hit;
}

namespace {

void render_row(const PosedModel& model, const CameraSpec& camera, int v, std::uint16_t* row) {
  for (int u = 0; u < camera.width; ++u) {
    const auto hit = cast_pixel(model, camera.intrinsics, u, v);
    std::uint16_t mm = 0;
    if (hit && hit->depth > 0.0) {
      const double q = std::round(hit->depth * 1000.0);
      if (q >= 1.0 && q <= 65535.0) mm = static_cast<std::uint16_t>(q);
    }
    row[u] = mm;
  }
}

}  // namespace

DepthImage render_depth(const PosedModel& camera_model, const CameraSpec& camera, Execution exec) {
  camera.validate();
  DepthImage img;
  img.width = camera.width;
  img.height = camera.height;
  img.intrinsics = camera.intrinsics;
  img.depth.assign(static_cast<std::size_t>(camera.width) * static_cast<std::size_t>(camera.height), 0);
  const std::size_t stride = static_cast<std::size_t>(camera.width);
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (int v = 0; v < camera.height; ++v)
      render_row(camera_model, camera, v, img.depth.data() + static_cast<std::size_t>(v) * stride);
  } else {
    for (int v = 0; v < camera.height; ++v)
      render_row(camera_model, camera, v, img.depth.data() + static_cast<std::size_t>(v) * stride);
  }
  return img;
}

Render render_cloud(const Skeleton& skeleton, const PoseParams& pose, const CameraSpec& camera,
                    Execution exec) {
  PosedModel model = forward_kinematics(skeleton, pose);
  for (auto& s : model.segments) {
    s.start = camera.world_to_camera * s.start;
    s.end = camera.world_to_camera * s.end;
  }
  DepthImage img = render_depth(model, camera, exec);
  const ForegroundMask mask = background_subtract(img, 65536.0);
  if (mask.count() == 0)
    throw InvalidInput("render is empty: the model covers no pixel of the camera");
  PointCloud cloud = to_point_cloud(img, mask);
  return {std::move(img), std::move(cloud)};
}

}  // namespace posefit
