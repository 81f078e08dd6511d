#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include "posefit/skeleton.hpp"

namespace fixtures {

inline std::string data(const std::string& rel) { return std::string(POSEFIT_DATA_DIR) + "/" + rel; }

inline posefit::LinkSpec link(int id, std::optional<int> parent, int axes = 3, bool length_free = true,
                             double length = 1.0, double radius = 0.1) {
  posefit::LinkSpec l;
  l.id = id;
  l.parent = parent;
  const Eigen::Vector3d basis[3] = {Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitY(),
                                    Eigen::Vector3d::UnitX()};
  for (int k = 0; k < axes; ++k) {
    l.joint.rotational_axes.push_back(basis[k % 3]);
    l.joint.angle_limits.push_back({-3.14159, 3.14159});
  }
  l.joint.length_free = length_free;
  l.joint.length_limits = {0.5 * length, 1.5 * length};
  l.default_length = length;
  l.radius = radius;
  return l;
}

inline posefit::Skeleton chain(int n, int axes = 3, bool length_free = true) {
  std::vector<posefit::LinkSpec> links;
  for (int i = 0; i < n; ++i)
    links.push_back(link(i, i == 0 ? std::nullopt : std::optional<int>(i - 1), axes, length_free));
  return posefit::Skeleton("chain", links);
}

/// Random tree: link i's parent is uniform among earlier links; axes are random unit vectors.
inline posefit::Skeleton random_tree(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> axes_count(0, 3);
  std::uniform_real_distribution<double> u(-1.0, 1.0), len(0.1, 1.0);
  std::vector<posefit::LinkSpec> links;
  for (int i = 0; i < n; ++i) {
    posefit::LinkSpec l;
    l.id = i;
    if (i > 0) l.parent = std::uniform_int_distribution<int>(0, i - 1)(rng);
    const int k = axes_count(rng);
    for (int a = 0; a < k; ++a) {
      Eigen::Vector3d axis(u(rng), u(rng), u(rng));
      l.joint.rotational_axes.push_back(axis.normalized());
      l.joint.angle_limits.push_back({-3.0, 3.0});
    }
    l.default_length = len(rng);
    l.joint.length_free = (i % 2) == 0;
    l.joint.length_limits = {0.5 * l.default_length, 2.0 * l.default_length};
    l.radius = 0.05;
    links.push_back(l);
  }
  return posefit::Skeleton("random", links);
}

inline Eigen::AlignedBox3d unit_box() {
  return {Eigen::Vector3d::Constant(-1.0), Eigen::Vector3d::Constant(1.0)};
}

/// Fresh empty directory under the system temp dir.
inline std::string temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("posefit_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

// Points on the cylindrical body surface of every capsule in the model.
inline std::vector<posefit::Point3> surface_points(const posefit::PosedModel& m, posefit::Rng& rng, int per_link) {
  std::vector<posefit::Point3> pts;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& s : m.segments) {
    const posefit::Point3 axis = (s.end - s.start).normalized();
    const posefit::Point3 n1 = axis.unitOrthogonal(), n2 = axis.cross(n1);
    for (int k = 0; k < per_link; ++k) {
      const double phi = 2 * std::numbers::pi * u(rng);
      // Inset slightly so rounding cannot push a point outside.
      const double r = s.radius * (1.0 - 1e-9);
      pts.push_back(s.start + (s.end - s.start) * u(rng) + r * (std::cos(phi) * n1 + std::sin(phi) * n2));
    }
  }
  return pts;
}

inline posefit::Skeleton scaled(const posefit::Skeleton& sk, double k) {
  std::vector<posefit::LinkSpec> links;
  for (std::size_t i = 0; i < sk.link_count(); ++i) {
    posefit::LinkSpec l = sk.link(i);
    l.default_length *= k;
    l.radius *= k;
    l.joint.length_limits = posefit::Interval{l.joint.length_limits.lo * k, l.joint.length_limits.hi * k};
    links.push_back(l);
  }
  return posefit::Skeleton(sk.name(), links);
}

/// The pose of scaled(sk, k) matching pose: root position and free lengths times k.
inline posefit::PoseParams scaled_pose(const posefit::Skeleton& sk, const posefit::PoseParams& pose, double k) {
  posefit::PoseParams out = pose;
  out.set_root_position(pose.root_position() * k);
  for (std::size_t i = posefit::Skeleton::kRootParams; i < pose.size(); ++i)
    if (sk.param_kind(i) == posefit::ParamKind::LinkLength) out[i] *= k;
  return out;
}

}  // namespace fixtures
