#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace posefit {

using Point3 = Eigen::Vector3d;
using Rng = std::mt19937_64;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

struct JointSpec {
  std::vector<Eigen::Vector3d> rotational_axes;  // parent-link frame, unit length
  std::vector<Interval> angle_limits;            // radians, one per axis
  bool length_free = false;
  Interval length_limits;                        // meters, used when length_free

  std::size_t param_count() const { return rotational_axes.size() + (length_free ? 1 : 0); }
};

struct LinkSpec {
  int id = 0;
  std::optional<int> parent;  // nullopt for the root
  JointSpec joint;
  double default_length = 1.0;
  double radius = 0.01;
};

/// Kind of an entry in the flat parameter vector.
enum class ParamKind { RootPosition, RootOrientation, JointAngle, LinkLength };

/// Interchangeable link chains, e.g. the legs of a spider. Every member lists the
/// same number of link ids; member k's i-th link corresponds to member j's i-th link.
using SymmetryGroup = std::vector<std::vector<int>>;

/// Immutable, validated kinematic tree. Links are stored in topological order
/// (every parent before its children); that order defines the parameter layout:
/// [root position (3), root quaternion w,x,y,z (4), then per link: angles, length?].
class Skeleton {
 public:
  static constexpr std::size_t kRootParams = 7;

  /// Validates and topologically sorts the links.
  Skeleton(std::string name, std::vector<LinkSpec> links,
           std::vector<SymmetryGroup> symmetry = {},
           Eigen::Quaterniond rest_orientation = Eigen::Quaterniond::Identity());

  const std::string& name() const { return name_; }
  const std::vector<LinkSpec>& links() const { return links_; }
  const LinkSpec& link(std::size_t index) const { return links_[index]; }
  std::size_t link_count() const { return links_.size(); }

  /// Index into links() of the link with this id, or nullopt.
  std::optional<std::size_t> index_of(int id) const;
  /// Index of the parent link; nullopt for the root (always index 0).
  std::optional<std::size_t> parent_index(std::size_t index) const { return parent_index_[index]; }
  const std::vector<std::size_t>& children(std::size_t index) const { return children_[index]; }
  /// The link and all its descendants, in topological order.
  std::vector<std::size_t> subtree(std::size_t index) const;

  std::size_t dof() const { return dof_; }
  std::size_t param_offset(std::size_t index) const { return offsets_[index]; }
  ParamKind param_kind(std::size_t param) const { return kinds_[param]; }
  /// Limits of a bounded entry (joint angle or free length); nullopt for root entries.
  std::optional<Interval> param_limits(std::size_t param) const;

  const std::vector<SymmetryGroup>& symmetry() const { return symmetry_; }
  /// Upright orientation of the root in a z-up world; used to stage synthetic scenes.
  const Eigen::Quaterniond& rest_orientation() const { return rest_orientation_; }

  double max_radius() const;

 private:
  std::string name_;
  std::vector<LinkSpec> links_;
  std::vector<std::optional<std::size_t>> parent_index_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> offsets_;
  std::vector<ParamKind> kinds_;
  std::vector<std::optional<Interval>> limits_;
  std::vector<SymmetryGroup> symmetry_;
  Eigen::Quaterniond rest_orientation_;
  std::size_t dof_ = kRootParams;
};

/// Parses the JSON skeleton document. Throws SkeletonError naming link and field.
Skeleton parse_skeleton(std::string_view text);
Skeleton load_skeleton(const std::string& path);

/// Stored-parameter count: 7 for the root transform (the quaternion stores 4
/// numbers for 3 rotational degrees of freedom) plus each link's angles and free length.
std::size_t dof_count(const Skeleton& skeleton);

/// Flat parameter vector theta.
class PoseParams {
 public:
  PoseParams() = default;
  explicit PoseParams(std::vector<double> theta) : theta_(std::move(theta)) {}

  /// Assembles theta from structured blocks; blocks must follow the skeleton layout.
  static PoseParams from_parts(const Skeleton& skeleton, const Point3& root_position,
                               const Eigen::Quaterniond& root_orientation,
                               const std::vector<std::vector<double>>& link_blocks);

  std::size_t size() const { return theta_.size(); }
  double operator[](std::size_t i) const { return theta_[i]; }
  double& operator[](std::size_t i) { return theta_[i]; }
  std::span<const double> values() const { return theta_; }
  const std::vector<double>& vector() const { return theta_; }

  Point3 root_position() const { return {theta_[0], theta_[1], theta_[2]}; }
  /// Stored (possibly non-normalized) quaternion.
  Eigen::Quaterniond root_orientation() const {
    return {theta_[3], theta_[4], theta_[5], theta_[6]};
  }
  void set_root_position(const Point3& p);
  void set_root_orientation(const Eigen::Quaterniond& q);

  /// Parameter block of one link (angles followed by the free length, if any).
  std::span<const double> link_block(const Skeleton& skeleton, std::size_t index) const;
  std::span<const double> link_angles(const Skeleton& skeleton, std::size_t index) const;
  /// Free length from theta, otherwise the link's default length.
  double link_length(const Skeleton& skeleton, std::size_t index) const;

  bool operator==(const PoseParams&) const = default;

 private:
  std::vector<double> theta_;
};

struct Segment {
  Point3 start;
  Point3 end;
  double radius = 0.0;
  int link_id = 0;
};

/// World-space capsules, one per link, in the skeleton's topological order.
struct PosedModel {
  std::vector<Segment> segments;
};

/// Throws InvalidInput on dimension mismatch or non-finite entries.
void check_pose(const Skeleton& skeleton, const PoseParams& pose);

PosedModel forward_kinematics(const Skeleton& skeleton, const PoseParams& pose);

/// Bounded entries uniform within limits, root position uniform in root_box and
/// orientation uniform on the unit 3-sphere. Fixed lengths are not part of theta.
PoseParams random_pose(const Skeleton& skeleton, const Eigen::AlignedBox3d& root_box, Rng& rng);

/// Clamps bounded entries and renormalizes the quaternion. Idempotent.
PoseParams clamp_pose(const Skeleton& skeleton, const PoseParams& pose);

/// Theta with every bounded entry at its interval midpoint and the given root transform.
PoseParams rest_pose(const Skeleton& skeleton, const Point3& root_position,
                     const Eigen::Quaterniond& root_orientation);

/// Applies a rigid transform to the root, which moves the whole posed model rigidly.
PoseParams transform_pose(const PoseParams& pose, const Eigen::Isometry3d& transform);

}  // namespace posefit
