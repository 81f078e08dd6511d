#include "posefit/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "posefit/error.hpp"

namespace posefit {

namespace {

constexpr double kAxisTolerance = 1e-9;
constexpr std::size_t kMaxAxes = 4;

void validate_link(const LinkSpec& link) {
  const auto& joint = link.joint;
  if (joint.rotational_axes.size() > kMaxAxes)
    throw SkeletonError(link.id, "axes", "at most 4 rotational axes are supported");
  if (joint.angle_limits.size() != joint.rotational_axes.size())
    throw SkeletonError(link.id, "angle_limits", "need one interval per axis");
  for (std::size_t i = 0; i < joint.rotational_axes.size(); ++i) {
    const auto& axis = joint.rotational_axes[i];
    if (!axis.allFinite() || std::abs(axis.norm() - 1.0) > kAxisTolerance)
      throw SkeletonError(link.id, "axes", "axis " + std::to_string(i) + " is not unit length");
    for (std::size_t j = 0; j < i; ++j)
      if ((axis - joint.rotational_axes[j]).norm() <= kAxisTolerance)
        throw SkeletonError(link.id, "axes", "axes " + std::to_string(j) + " and " +
                                                 std::to_string(i) + " coincide");
  }
  for (const auto& lim : joint.angle_limits)
    if (!std::isfinite(lim.lo) || !std::isfinite(lim.hi) || lim.lo > lim.hi)
      throw SkeletonError(link.id, "angle_limits", "inverted or non-finite interval");
  if (!(link.radius > 0.0) || !std::isfinite(link.radius))
    throw SkeletonError(link.id, "radius", "must be positive");
  if (!(link.default_length > 0.0) || !std::isfinite(link.default_length))
    throw SkeletonError(link.id, "default_length", "must be positive");
  if (joint.length_free) {
    const auto& lim = joint.length_limits;
    if (!std::isfinite(lim.lo) || !std::isfinite(lim.hi) || lim.lo > lim.hi)
      throw SkeletonError(link.id, "length_limits", "inverted or non-finite interval");
    if (lim.lo <= 0.0) throw SkeletonError(link.id, "length_limits", "lengths must be positive");
    if (!lim.contains(link.default_length))
      throw SkeletonError(link.id, "default_length", "outside length_limits");
  }
}

// Stable topological sort: among ready links, the one earliest in the input goes first.
std::vector<LinkSpec> sort_links(std::vector<LinkSpec> links) {
  if (links.empty()) throw SkeletonError(-1, "links", "skeleton has no links");

  std::set<int> ids;
  for (const auto& l : links)
    if (!ids.insert(l.id).second) throw SkeletonError(l.id, "id", "duplicate id");

  int root_count = 0;
  for (const auto& l : links) {
    if (!l.parent) {
      ++root_count;
      continue;
    }
    if (*l.parent == l.id) throw SkeletonError(l.id, "parent", "cycle: link is its own parent");
    if (!ids.contains(*l.parent))
      throw SkeletonError(l.id, "parent", "unknown parent id " + std::to_string(*l.parent));
  }
  if (root_count != 1)
    throw SkeletonError(-1, "parent", "expected exactly one root link, found " +
                                          std::to_string(root_count));

  std::vector<LinkSpec> sorted;
  sorted.reserve(links.size());
  std::set<int> placed;
  std::vector<bool> used(links.size(), false);
  while (sorted.size() < links.size()) {
    bool progressed = false;
    for (std::size_t i = 0; i < links.size(); ++i) {
      if (used[i]) continue;
      if (!links[i].parent || placed.contains(*links[i].parent)) {
        used[i] = true;
        placed.insert(links[i].id);
        sorted.push_back(links[i]);
        progressed = true;
        break;
      }
    }
    if (!progressed) {
      auto it = std::find(used.begin(), used.end(), false);
      throw SkeletonError(links[static_cast<std::size_t>(it - used.begin())].id, "parent",
                          "cycle: link is not connected to the root");
    }
  }
  return sorted;
}

}  // namespace

Skeleton::Skeleton(std::string name, std::vector<LinkSpec> links,
                   std::vector<SymmetryGroup> symmetry, Eigen::Quaterniond rest_orientation)
    : name_(std::move(name)),
      symmetry_(std::move(symmetry)),
      rest_orientation_(rest_orientation.normalized()) {
  for (const auto& l : links) validate_link(l);
  links_ = sort_links(std::move(links));

  const std::size_t n = links_.size();
  parent_index_.resize(n);
  children_.resize(n);
  offsets_.resize(n);
  kinds_.assign(3, ParamKind::RootPosition);
  kinds_.insert(kinds_.end(), 4, ParamKind::RootOrientation);
  limits_.assign(kRootParams, std::nullopt);

  for (std::size_t i = 0; i < n; ++i) {
    if (links_[i].parent) {
      auto p = index_of(*links_[i].parent);
      parent_index_[i] = p;
      children_[*p].push_back(i);
    }
    offsets_[i] = dof_;
    const auto& joint = links_[i].joint;
    for (const auto& lim : joint.angle_limits) {
      kinds_.push_back(ParamKind::JointAngle);
      limits_.push_back(lim);
    }
    if (joint.length_free) {
      kinds_.push_back(ParamKind::LinkLength);
      limits_.push_back(joint.length_limits);
    }
    dof_ += joint.param_count();
  }

  for (const auto& group : symmetry_) {
    if (group.size() < 2) throw SkeletonError(-1, "symmetry", "a group needs two or more members");
    std::set<int> seen;
    for (const auto& member : group) {
      if (member.size() != group.front().size() || member.empty())
        throw SkeletonError(-1, "symmetry", "members of a group must have equal, non-zero size");
      for (int id : member) {
        if (!index_of(id)) throw SkeletonError(id, "symmetry", "unknown link id");
        if (!seen.insert(id).second) throw SkeletonError(id, "symmetry", "link listed twice");
      }
    }
  }
}

std::optional<std::size_t> Skeleton::index_of(int id) const {
  for (std::size_t i = 0; i < links_.size(); ++i)
    if (links_[i].id == id) return i;
  return std::nullopt;
}

std::vector<std::size_t> Skeleton::subtree(std::size_t index) const {
  std::vector<bool> inside(links_.size(), false);
  inside[index] = true;
  std::vector<std::size_t> out{index};
  // Topological order means one forward sweep collects all descendants.
  for (std::size_t i = index + 1; i < links_.size(); ++i) {
    if (parent_index_[i] && inside[*parent_index_[i]]) {
      inside[i] = true;
      out.push_back(i);
    }
  }
  return out;
}

std::optional<Interval> Skeleton::param_limits(std::size_t param) const { return limits_[param]; }

double Skeleton::max_radius() const {
  double r = 0.0;
  for (const auto& l : links_) r = std::max(r, l.radius);
  return r;
}

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, int link_id) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw SkeletonError(link_id, key, "unknown key");
  }
}

Interval parse_interval(const json& j, int link_id, const char* field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw SkeletonError(link_id, field, "expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Eigen::Vector3d parse_vec3(const json& j, int link_id, const char* field) {
  if (!j.is_array() || j.size() != 3)
    throw SkeletonError(link_id, field, "expected [x, y, z]");
  Eigen::Vector3d v;
  for (int k = 0; k < 3; ++k) {
    if (!j[k].is_number()) throw SkeletonError(link_id, field, "expected numbers");
    v[k] = j[k].get<double>();
  }
  return v;
}

double require_number(const json& obj, const char* key, int link_id) {
  if (!obj.contains(key)) throw SkeletonError(link_id, key, "missing");
  if (!obj[key].is_number()) throw SkeletonError(link_id, key, "expected a number");
  return obj[key].get<double>();
}

LinkSpec parse_link(const json& j) {
  if (!j.is_object()) throw SkeletonError(-1, "links", "each link must be an object");
  if (!j.contains("id") || !j["id"].is_number_integer() || j["id"].get<long long>() < 0)
    throw SkeletonError(-1, "id", "missing or not a non-negative integer");
  LinkSpec link;
  link.id = j["id"].get<int>();
  reject_unknown(j, {"id", "parent", "axes", "angle_limits", "length_free", "length_limits",
                     "default_length", "radius"},
                 link.id);

  if (!j.contains("parent")) throw SkeletonError(link.id, "parent", "missing");
  if (!j["parent"].is_null()) {
    if (!j["parent"].is_number_integer())
      throw SkeletonError(link.id, "parent", "expected integer or null");
    link.parent = j["parent"].get<int>();
  }

  if (j.contains("axes")) {
    if (!j["axes"].is_array()) throw SkeletonError(link.id, "axes", "expected an array");
    for (const auto& a : j["axes"]) link.joint.rotational_axes.push_back(parse_vec3(a, link.id, "axes"));
  }
  if (j.contains("angle_limits")) {
    if (!j["angle_limits"].is_array())
      throw SkeletonError(link.id, "angle_limits", "expected an array");
    for (const auto& l : j["angle_limits"])
      link.joint.angle_limits.push_back(parse_interval(l, link.id, "angle_limits"));
  } else {
    link.joint.angle_limits.assign(link.joint.rotational_axes.size(),
                                   Interval{-std::numbers::pi, std::numbers::pi});
  }

  if (j.contains("length_free")) {
    if (!j["length_free"].is_boolean())
      throw SkeletonError(link.id, "length_free", "expected a boolean");
    link.joint.length_free = j["length_free"].get<bool>();
  }
  if (link.joint.length_free) {
    if (!j.contains("length_limits"))
      throw SkeletonError(link.id, "length_limits", "required when length_free");
    link.joint.length_limits = parse_interval(j["length_limits"], link.id, "length_limits");
  } else if (j.contains("length_limits")) {
    link.joint.length_limits = parse_interval(j["length_limits"], link.id, "length_limits");
  }
  link.default_length = require_number(j, "default_length", link.id);
  link.radius = require_number(j, "radius", link.id);
  return link;
}

}  // namespace

Skeleton parse_skeleton(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SkeletonError(-1, "", std::string("malformed document: ") + e.what());
  }
  if (!doc.is_object()) throw SkeletonError(-1, "", "malformed document: expected an object");
  reject_unknown(doc, {"name", "links", "symmetry", "rest_orientation"}, -1);
  if (!doc.contains("name") || !doc["name"].is_string())
    throw SkeletonError(-1, "name", "missing or not a string");
  if (!doc.contains("links") || !doc["links"].is_array())
    throw SkeletonError(-1, "links", "missing or not an array");

  std::vector<LinkSpec> links;
  for (const auto& l : doc["links"]) links.push_back(parse_link(l));

  std::vector<SymmetryGroup> symmetry;
  if (doc.contains("symmetry")) {
    try {
      symmetry = doc["symmetry"].get<std::vector<SymmetryGroup>>();
    } catch (const json::exception&) {
      throw SkeletonError(-1, "symmetry", "expected a list of groups of link-id lists");
    }
  }
  Eigen::Quaterniond rest = Eigen::Quaterniond::Identity();
  if (doc.contains("rest_orientation")) {
    const auto& q = doc["rest_orientation"];
    if (!q.is_array() || q.size() != 4)
      throw SkeletonError(-1, "rest_orientation", "expected [w, x, y, z]");
    Eigen::Vector4d v;
    for (int k = 0; k < 4; ++k) {
      if (!q[k].is_number()) throw SkeletonError(-1, "rest_orientation", "expected numbers");
      v[k] = q[k].get<double>();
    }
    if (!(v.norm() > 0.0)) throw SkeletonError(-1, "rest_orientation", "zero quaternion");
    rest = Eigen::Quaterniond(v[0], v[1], v[2], v[3]);
  }
  return Skeleton(doc["name"].get<std::string>(), std::move(links), std::move(symmetry), rest);
}

Skeleton load_skeleton(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open skeleton file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_skeleton(ss.str());
  } catch (const SkeletonError& e) {
    throw SkeletonError(e.link_id(), e.field(), std::string(e.what()) + " (in '" + path + "')");
  }
}

std::size_t dof_count(const Skeleton& skeleton) { return skeleton.dof(); }

PoseParams PoseParams::from_parts(const Skeleton& skeleton, const Point3& root_position,
                                  const Eigen::Quaterniond& root_orientation,
                                  const std::vector<std::vector<double>>& link_blocks) {
  if (link_blocks.size() != skeleton.link_count())
    throw InvalidInput("expected one parameter block per link");
  std::vector<double> theta{root_position.x(),   root_position.y(),   root_position.z(),
                            root_orientation.w(), root_orientation.x(), root_orientation.y(),
                            root_orientation.z()};
  for (std::size_t i = 0; i < link_blocks.size(); ++i) {
    if (link_blocks[i].size() != skeleton.link(i).joint.param_count())
      throw InvalidInput("parameter block size mismatch for link " +
                         std::to_string(skeleton.link(i).id));
    theta.insert(theta.end(), link_blocks[i].begin(), link_blocks[i].end());
  }
  return PoseParams(std::move(theta));
}

void PoseParams::set_root_position(const Point3& p) {
  theta_[0] = p.x();
  theta_[1] = p.y();
  theta_[2] = p.z();
}

void PoseParams::set_root_orientation(const Eigen::Quaterniond& q) {
  theta_[3] = q.w();
  theta_[4] = q.x();
  theta_[5] = q.y();
  theta_[6] = q.z();
}

std::span<const double> PoseParams::link_block(const Skeleton& skeleton, std::size_t index) const {
  return std::span<const double>(theta_).subspan(skeleton.param_offset(index),
                                                 skeleton.link(index).joint.param_count());
}

std::span<const double> PoseParams::link_angles(const Skeleton& skeleton, std::size_t index) const {
  return std::span<const double>(theta_).subspan(skeleton.param_offset(index),
                                                 skeleton.link(index).joint.rotational_axes.size());
}

double PoseParams::link_length(const Skeleton& skeleton, std::size_t index) const {
  const auto& link = skeleton.link(index);
  if (!link.joint.length_free) return link.default_length;
  return theta_[skeleton.param_offset(index) + link.joint.rotational_axes.size()];
}

void check_pose(const Skeleton& skeleton, const PoseParams& pose) {
  if (pose.size() != skeleton.dof())
    throw InvalidInput("pose has " + std::to_string(pose.size()) + " parameters, skeleton '" +
                       skeleton.name() + "' expects " + std::to_string(skeleton.dof()));
  for (std::size_t i = 0; i < pose.size(); ++i)
    if (!std::isfinite(pose[i]))
      throw InvalidInput("pose parameter " + std::to_string(i) + " is not finite");
}

PosedModel forward_kinematics(const Skeleton& skeleton, const PoseParams& pose) {
  check_pose(skeleton, pose);
  const std::size_t n = skeleton.link_count();
  std::vector<Eigen::Matrix3d> frames(n);
  PosedModel model;
  model.segments.resize(n);

  const Eigen::Matrix3d root_frame = pose.root_orientation().normalized().toRotationMatrix();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& link = skeleton.link(i);
    const auto parent = skeleton.parent_index(i);
    Eigen::Matrix3d frame = parent ? frames[*parent] : root_frame;
    const Point3 start = parent ? model.segments[*parent].end : pose.root_position();

    const auto angles = pose.link_angles(skeleton, i);
    for (std::size_t k = 0; k < angles.size(); ++k)
      frame = frame * Eigen::AngleAxisd(angles[k], link.joint.rotational_axes[k]).toRotationMatrix();
    frames[i] = frame;

    auto& seg = model.segments[i];
    seg.start = start;
    seg.end = start + frame.col(0) * pose.link_length(skeleton, i);
    seg.radius = link.radius;
    seg.link_id = link.id;
  }
  return model;
}

namespace {

// Shoemake's method: uniform on the unit 3-sphere from three uniforms.
Eigen::Quaterniond uniform_quaternion(Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u1 = u01(rng), u2 = u01(rng), u3 = u01(rng);
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double t2 = 2.0 * std::numbers::pi * u2, t3 = 2.0 * std::numbers::pi * u3;
  Eigen::Quaterniond q(b * std::cos(t3), a * std::sin(t2), a * std::cos(t2), b * std::sin(t3));
  return q.normalized();
}

}  // namespace

PoseParams random_pose(const Skeleton& skeleton, const Eigen::AlignedBox3d& root_box, Rng& rng) {
  std::vector<double> theta(skeleton.dof());
  for (int k = 0; k < 3; ++k) {
    std::uniform_real_distribution<double> d(root_box.min()[k], root_box.max()[k]);
    theta[static_cast<std::size_t>(k)] = d(rng);
  }
  const auto q = uniform_quaternion(rng);
  theta[3] = q.w();
  theta[4] = q.x();
  theta[5] = q.y();
  theta[6] = q.z();
  for (std::size_t i = Skeleton::kRootParams; i < theta.size(); ++i) {
    const auto lim = *skeleton.param_limits(i);
    std::uniform_real_distribution<double> d(lim.lo, lim.hi);
    theta[i] = lim.lo == lim.hi ? lim.lo : d(rng);
  }
  return PoseParams(std::move(theta));
}

PoseParams clamp_pose(const Skeleton& skeleton, const PoseParams& pose) {
  check_pose(skeleton, pose);
  PoseParams out = pose;
  const double norm = pose.root_orientation().norm();
  if (norm > 0.0) {
    // Leave an already-unit quaternion bit-for-bit alone so clamping stays idempotent.
    if (norm != 1.0) out.set_root_orientation(pose.root_orientation().normalized());
  } else {
    out.set_root_orientation(Eigen::Quaterniond::Identity());
  }
  for (std::size_t i = Skeleton::kRootParams; i < out.size(); ++i)
    out[i] = skeleton.param_limits(i)->clamp(out[i]);
  return out;
}

PoseParams rest_pose(const Skeleton& skeleton, const Point3& root_position,
                     const Eigen::Quaterniond& root_orientation) {
  std::vector<double> theta(skeleton.dof());
  for (std::size_t i = Skeleton::kRootParams; i < theta.size(); ++i) {
    const auto lim = *skeleton.param_limits(i);
    theta[i] = 0.5 * (lim.lo + lim.hi);
  }
  PoseParams pose(std::move(theta));
  pose.set_root_position(root_position);
  pose.set_root_orientation(root_orientation.normalized());
  return pose;
}

PoseParams transform_pose(const PoseParams& pose, const Eigen::Isometry3d& transform) {
  PoseParams out = pose;
  out.set_root_position(transform * pose.root_position());
  const Eigen::Quaterniond r(transform.rotation());
  out.set_root_orientation((r * pose.root_orientation().normalized()).normalized());
  return out;
}

}  // namespace posefit
