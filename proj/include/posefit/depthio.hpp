#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "posefit/objective.hpp"

namespace posefit {

struct Intrinsics {
  double fx = 1.0, fy = 1.0;  // pixels, > 0
  double cx = 0.0, cy = 0.0;  // pixels

  /// Back-projects pixel (u, v) at depth z meters; +z points into the scene.
  Point3 back_project(double u, double v, double z) const {
    return {z * (u - cx) / fx, z * (v - cy) / fy, z};
  }
  /// Pixel coordinates of a camera-frame point with z > 0.
  Eigen::Vector2d project(const Point3& p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }
};

/// Row-major 16-bit depth map in millimeters; 0 marks an invalid pixel.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> depth;
  Intrinsics intrinsics;

  std::uint16_t at(int u, int v) const {
    return depth[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
                 static_cast<std::size_t>(u)];
  }
  /// Throws InvalidInput if dimensions or intrinsics are inconsistent.
  void validate() const;
};

struct ForegroundMask {
  int width = 0;
  int height = 0;
  std::vector<bool> foreground;

  std::size_t count() const;
};

/// Sidecar path: same stem with the ".intr" extension.
std::string intrinsics_path(const std::string& depth_path);
Intrinsics load_intrinsics(const std::string& path);
void save_intrinsics(const Intrinsics& intr, const std::string& path);

/// Binary PGM (P5, maxval 65535, big-endian) plus its ".intr" sidecar.
DepthImage load_depth(const std::string& path);
void save_depth(const DepthImage& img, const std::string& path);

/// True where 0 < depth < far_mm.
ForegroundMask background_subtract(const DepthImage& img, double far_mm);

/// Back-projects the masked pixels. Throws InvalidInput when the mask selects nothing.
PointCloud to_point_cloud(const DepthImage& img, const ForegroundMask& mask);

/// Plain-text "x y z" per line; blank lines and '#' comments are skipped.
PointCloud load_xyz(const std::string& path);
void save_xyz(const PointCloud& cloud, const std::string& path);

}  // namespace posefit
