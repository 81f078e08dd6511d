#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "posefit/geometry.hpp"
#include "posefit/skeleton.hpp"

namespace posefit {

inline constexpr double kSigmaFloor = 1e-6;

/// Population standard deviation of point distances to the centroid, floored at 1e-6 m.
double compute_sigma(std::span<const Point3> points);

/// Observed points (meters, camera frame) with the robust-loss scale cached at construction.
class PointCloud {
 public:
  /// Throws InvalidInput when empty or when any coordinate is non-finite.
  explicit PointCloud(std::vector<Point3> points);
  /// Same points with a caller-chosen scale (must be positive).
  PointCloud with_sigma(double sigma) const;

  std::size_t size() const { return points_.size(); }
  const std::vector<Point3>& points() const { return points_; }
  double sigma() const { return sigma_; }
  Eigen::AlignedBox3d bounds() const;

  // Structure-of-arrays copies for the distance kernels.
  std::span<const double> xs() const { return xs_; }
  std::span<const double> ys() const { return ys_; }
  std::span<const double> zs() const { return zs_; }

 private:
  std::vector<Point3> points_;
  std::vector<double> xs_, ys_, zs_;
  double sigma_ = kSigmaFloor;
};

struct ObjectiveValue {
  double value = 0.0;           // mean of ln(1 + d/sigma), nats
  std::uint64_t evaluations = 0;  // point-to-model distance queries performed
};

enum class Execution { Serial, Parallel };

/// Mean robust log-distance of the cloud to the posed skeleton. Points are summed
/// in index order, so the result does not depend on the thread count.
ObjectiveValue evaluate(const Skeleton& skeleton, const PoseParams& pose, const PointCloud& cloud,
                        Execution exec = Execution::Parallel);

/// Straight per-point loop over distance_to_model; the oracle for evaluate().
ObjectiveValue evaluate_reference(const Skeleton& skeleton, const PoseParams& pose,
                                  const PointCloud& cloud);

/// Element i is bit-identical to evaluate(skeleton, poses[i], cloud) in either mode.
/// A failing pose raises InvalidInput naming its index.
std::vector<ObjectiveValue> evaluate_batch(const Skeleton& skeleton, std::span<const PoseParams> poses,
                                           const PointCloud& cloud,
                                           Execution exec = Execution::Parallel);

namespace kernels {

/// Per-point surface distance min over all segments (clamped at zero).
void point_distances(const PosedModel& model, const PointCloud& cloud, std::span<double> out,
                     Execution exec);

/// Fixed-order mean of ln(1 + d/sigma).
double mean_log_loss(std::span<const double> distances, double sigma);

}  // namespace kernels

}  // namespace posefit
