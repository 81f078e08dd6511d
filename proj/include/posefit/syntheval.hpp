#pragma once

#include <optional>
#include <string>
#include <vector>

#include "posefit/depthio.hpp"
#include "posefit/objective.hpp"
#include "posefit/skeleton.hpp"

namespace posefit {

struct CameraSpec {
  Intrinsics intrinsics;
  int width = 0;
  int height = 0;
  Eigen::Isometry3d world_to_camera = Eigen::Isometry3d::Identity();

  void validate() const;
  /// Camera at `eye` looking at `target` with world +z as up; image y points down.
  static Eigen::Isometry3d look_at(const Point3& eye, const Point3& target);
};

struct RayHit {
  double t = 0.0;      // distance along the unit ray direction
  double depth = 0.0;  // camera-frame z of the hit, meters
  int link_id = 0;
};

/// Nearest intersection with positive t of the ray origin + t*dir (dir unit) and the
/// capsule; nullopt on a miss. Body and both end caps are solved analytically.
std::optional<double> ray_capsule(const Point3& origin, const Point3& dir, const Point3& a,
                                  const Point3& b, double radius);

/// Nearest hit over all segments of a camera-frame model along the ray through
/// pixel (u, v) from the camera origin; ties go to the lower segment index.
std::optional<RayHit> cast_pixel(const PosedModel& camera_model, const Intrinsics& intr, int u, int v);

struct Render {
  DepthImage image;
  PointCloud cloud;
};

/// Z-buffer render of a camera-frame model: depth in 1 mm steps (0 on miss),
/// every hit pixel back-projected into the cloud. Parallel over rows.
DepthImage render_depth(const PosedModel& camera_model, const CameraSpec& camera,
                        Execution exec = Execution::Parallel);

/// Renders a world-frame pose seen through `camera`. Throws InvalidInput when the
/// model covers no pixel (for example when it is entirely behind the camera).
Render render_cloud(const Skeleton& skeleton, const PoseParams& pose, const CameraSpec& camera,
                    Execution exec = Execution::Parallel);

/// Gaussian displacement along each point's viewing ray; sigma is recomputed.
PointCloud add_noise(const PointCloud& cloud, double depth_sigma_mm, Rng& rng);

struct LinkError {
  int link_id = 0;
  double start_error = 0.0;  // meters
  double end_error = 0.0;
  bool correct = false;
};

struct AccuracyReport {
  std::vector<LinkError> links;
  double fraction_correct = 0.0;
  double threshold = 0.0;
};

/// A link is correct when both endpoints are within threshold of the truth link's
/// corresponding endpoints. Throws InvalidInput on size mismatch or threshold <= 0.
AccuracyReport link_accuracy(const PosedModel& estimated, const PosedModel& truth, double threshold);

/// Best score over all relabelings of each symmetry group's members. Within a
/// relabeling a link may match its counterpart in either endpoint order, since
/// interchangeable chains can be walked in opposite directions.
AccuracyReport link_accuracy_permuted(const PosedModel& estimated, const PosedModel& truth,
                                      const Skeleton& skeleton, double threshold);

double mean_link_length(const PosedModel& model);

struct BenchmarkOptions {
  int width = 120;
  int height = 90;
  double focal = 110.0;     // pixels, fx = fy
  double noise_mm = 0.0;
  double max_elevation_deg = 60.0;
};

struct BenchmarkCase {
  std::string cloud;       // paths as written in the manifest (relative to its directory)
  std::string truth;
  std::string intrinsics;
};

struct Manifest {
  std::string directory;
  std::vector<BenchmarkCase> cases;

  std::string resolve(const std::string& relative) const;
  /// Stem shared by every file of a case, e.g. "case_003".
  static std::string case_name(const BenchmarkCase& c);
};

Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& manifest, const std::string& path);

/// Elevations in degrees, evenly spaced over [0, max]; a single view sits at 0.
std::vector<double> view_elevations(int n_views, double max_elevation_deg);

/// Renders n_poses random poses from n_views elevations into outdir and writes
/// `manifest.txt`. Poses stand upright (rest orientation, random heading) with
/// joints sampled within limits. Truth poses are stored in the camera frame.
Manifest make_benchmark(const Skeleton& skeleton, int n_poses, int n_views, std::uint64_t seed,
                        const std::string& outdir, const BenchmarkOptions& options = {});

}  // namespace posefit
