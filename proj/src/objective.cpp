#include "posefit/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "posefit/error.hpp"

namespace posefit {

double compute_sigma(std::span<const Point3> points) {
  if (points.empty()) throw InvalidInput("cannot compute sigma of an empty cloud");
  Point3 centroid = Point3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  std::vector<double> dist(points.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    dist[i] = (points[i] - centroid).norm();
    mean += dist[i];
  }
  mean /= static_cast<double>(points.size());
  double var = 0.0;
  for (double d : dist) var += (d - mean) * (d - mean);
  var /= static_cast<double>(points.size());
  return std::max(std::sqrt(var), kSigmaFloor);
}

PointCloud::PointCloud(std::vector<Point3> points) : points_(std::move(points)) {
  if (points_.empty()) throw InvalidInput("point cloud is empty");
  xs_.reserve(points_.size());
  ys_.reserve(points_.size());
  zs_.reserve(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!points_[i].allFinite())
      throw InvalidInput("point " + std::to_string(i) + " has a non-finite coordinate");
    xs_.push_back(points_[i].x());
    ys_.push_back(points_[i].y());
    zs_.push_back(points_[i].z());
  }
  sigma_ = compute_sigma(points_);
}

PointCloud PointCloud::with_sigma(double sigma) const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidInput("sigma must be positive");
  PointCloud out = *this;
  out.sigma_ = sigma;
  return out;
}

Eigen::AlignedBox3d PointCloud::bounds() const {
  Eigen::AlignedBox3d box;
  for (const auto& p : points_) box.extend(p);
  return box;
}

namespace kernels {

namespace {

constexpr std::size_t kBlock = 256;

struct PackedSegment {
  double ax, ay, az, abx, aby, abz, ab2, r;
};

std::vector<PackedSegment> pack(const PosedModel& model) {
  std::vector<PackedSegment> out;
  out.reserve(model.segments.size());
  for (const auto& s : model.segments) {
    const Point3 ab = s.end - s.start;
    out.push_back({s.start.x(), s.start.y(), s.start.z(), ab.x(), ab.y(), ab.z(),
                   detail::dot3(ab.x(), ab.y(), ab.z(), ab.x(), ab.y(), ab.z()), s.radius});
  }
  return out;
}

// Same per-element arithmetic as detail::capsule_gap, written as array expressions
// so it lowers to packed max/min/sqrt.
void distance_block(const std::vector<PackedSegment>& segs, const double* x, const double* y,
                    const double* z, double* out, std::size_t n) {
  using Arr = Eigen::Array<double, Eigen::Dynamic, 1>;
  const auto len = static_cast<Eigen::Index>(n);
  const Eigen::Map<const Arr> px(x, len), py(y, len), pz(z, len);
  Eigen::Map<Arr> best(out, len);
  best.setConstant(std::numeric_limits<double>::infinity());
  Arr t(len), dx(len), dy(len), dz(len);
  for (const auto& s : segs) {
    if (s.ab2 == 0.0) {
      t.setZero();
    } else {
      t = (((px - s.ax) * s.abx + (py - s.ay) * s.aby) + (pz - s.az) * s.abz) / s.ab2;
      t = t.max(0.0).min(1.0);
    }
    dx = px - (s.ax + t * s.abx);
    dy = py - (s.ay + t * s.aby);
    dz = pz - (s.az + t * s.abz);
    best = best.min(((dx * dx + dy * dy) + dz * dz).sqrt() - s.r);
  }
  best = best.max(0.0);
}

}  // namespace

void point_distances(const PosedModel& model, const PointCloud& cloud, std::span<double> out,
                     Execution exec) {
  if (model.segments.empty()) throw InvalidInput("distance query against an empty model");
  const auto segs = pack(model);
  const std::size_t n = cloud.size();
  const auto x = cloud.xs(), y = cloud.ys(), z = cloud.zs();
  const auto blocks = static_cast<std::int64_t>((n + kBlock - 1) / kBlock);

  auto run = [&](std::int64_t b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kBlock;
    const std::size_t len = std::min(kBlock, n - begin);
    distance_block(segs, x.data() + begin, y.data() + begin, z.data() + begin, out.data() + begin,
                   len);
  };

  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) run(b);
  } else {
    for (std::int64_t b = 0; b < blocks; ++b) run(b);
  }
}

double mean_log_loss(std::span<const double> distances, double sigma) {
  double sum = 0.0;
  for (double d : distances) sum += d > 0.0 ? std::log1p(d / sigma) : 0.0;
  return sum / static_cast<double>(distances.size());
}

}  // namespace kernels

ObjectiveValue evaluate(const Skeleton& skeleton, const PoseParams& pose, const PointCloud& cloud,
                        Execution exec) {
  const PosedModel model = forward_kinematics(skeleton, pose);
  std::vector<double> dist(cloud.size());
  kernels::point_distances(model, cloud, dist, exec);
  return {kernels::mean_log_loss(dist, cloud.sigma()), cloud.size()};
}

ObjectiveValue evaluate_reference(const Skeleton& skeleton, const PoseParams& pose,
                                  const PointCloud& cloud) {
  const PosedModel model = forward_kinematics(skeleton, pose);
  double sum = 0.0;
  for (const auto& p : cloud.points()) {
    const double d = distance_to_model(p, model).distance;
    sum += d > 0.0 ? std::log1p(d / cloud.sigma()) : 0.0;
  }
  return {sum / static_cast<double>(cloud.size()), cloud.size()};
}

std::vector<ObjectiveValue> evaluate_batch(const Skeleton& skeleton, std::span<const PoseParams> poses,
                                           const PointCloud& cloud, Execution exec) {
  for (std::size_t i = 0; i < poses.size(); ++i) {
    try {
      check_pose(skeleton, poses[i]);
    } catch (const InvalidInput& e) {
      throw InvalidInput("pose " + std::to_string(i) + ": " + e.what());
    }
  }
  std::vector<ObjectiveValue> out(poses.size());
  const auto count = static_cast<std::int64_t>(poses.size());
  if (exec == Execution::Parallel) {
    // One pose per task; the per-pose kernel stays serial so nothing nests.
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i)
      out[static_cast<std::size_t>(i)] =
          evaluate(skeleton, poses[static_cast<std::size_t>(i)], cloud, Execution::Serial);
  } else {
    for (std::int64_t i = 0; i < count; ++i)
      out[static_cast<std::size_t>(i)] =
          evaluate(skeleton, poses[static_cast<std::size_t>(i)], cloud, Execution::Serial);
  }
  return out;
}

}  // namespace posefit
