#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "posefit/skeleton.hpp"

namespace posefit {

/// Estimator output and benchmark ground truth share this JSON document.
struct PoseFile {
  std::string skeleton;
  std::vector<double> theta;
  std::vector<std::array<Point3, 2>> endpoints;  // per link, topological order
  double objective = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t evaluations = 0;

  static PoseFile make(const Skeleton& skeleton, const PoseParams& pose, double objective,
                       std::uint64_t seed, std::uint64_t evaluations);

  std::string to_json() const;
  static PoseFile parse(const std::string& text);
  static PoseFile load(const std::string& path);
  void save(const std::string& path) const;

  /// Endpoints as a model (radius zero, link ids 0..n-1 by position).
  PosedModel model() const;
  /// Throws InvalidInput unless theta and endpoints agree with the skeleton within 1e-9.
  void check_against(const Skeleton& skeleton) const;
};

}  // namespace posefit
