#include "posefit/posefile.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "posefit/error.hpp"

namespace posefit {

using nlohmann::ordered_json;

PoseFile PoseFile::make(const Skeleton& skeleton, const PoseParams& pose, double objective,
                        std::uint64_t seed, std::uint64_t evaluations) {
  PoseFile f;
  f.skeleton = skeleton.name();
  f.theta = pose.vector();
  for (const auto& s : forward_kinematics(skeleton, pose).segments) f.endpoints.push_back({s.start, s.end});
  f.objective = objective;
  f.seed = seed;
  f.evaluations = evaluations;
  return f;
}

std::string PoseFile::to_json() const {
  ordered_json j;
  j["skeleton"] = skeleton;
  j["theta"] = theta;
  ordered_json ends = ordered_json::array();
  for (const auto& e : endpoints)
    ends.push_back({{e[0].x(), e[0].y(), e[0].z()}, {e[1].x(), e[1].y(), e[1].z()}});
  j["endpoints"] = ends;
  j["objective"] = objective;
  j["seed"] = seed;
  j["evaluations"] = evaluations;
  return j.dump(2) + "\n";
}

PoseFile PoseFile::parse(const std::string& text) {
  PoseFile f;
  try {
    const auto j = ordered_json::parse(text);
    f.skeleton = j.at("skeleton").get<std::string>();
    f.theta = j.at("theta").get<std::vector<double>>();
    for (const auto& e : j.at("endpoints")) {
      const auto a = e.at(0).get<std::array<double, 3>>();
      const auto b = e.at(1).get<std::array<double, 3>>();
      f.endpoints.push_back({Point3(a[0], a[1], a[2]), Point3(b[0], b[1], b[2])});
    }
    f.objective = j.at("objective").get<double>();
    f.seed = j.at("seed").get<std::uint64_t>();
    f.evaluations = j.at("evaluations").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed pose file: ") + e.what());
  }
  if (f.endpoints.empty()) throw FormatError("malformed pose file: no endpoints");
  return f;
}

PoseFile PoseFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open pose file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const FormatError& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
}

void PoseFile::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write pose file '" + path + "'");
  out << to_json();
  if (!out) throw FormatError("failed writing '" + path + "'");
}

PosedModel PoseFile::model() const {
  PosedModel m;
  int id = 0;
  for (const auto& e : endpoints) m.segments.push_back({e[0], e[1], 0.0, id++});
  return m;
}

void PoseFile::check_against(const Skeleton& sk) const {
  if (skeleton != sk.name())
    throw InvalidInput("pose file is for skeleton '" + skeleton + "', not '" + sk.name() + "'");
  const PoseParams pose(theta);
  const PosedModel fk = forward_kinematics(sk, pose);
  if (fk.segments.size() != endpoints.size()) throw InvalidInput("pose file endpoint count mismatch");
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    if ((fk.segments[i].start - endpoints[i][0]).lpNorm<Eigen::Infinity>() > 1e-9 ||
        (fk.segments[i].end - endpoints[i][1]).lpNorm<Eigen::Infinity>() > 1e-9)
      throw InvalidInput("pose file endpoints disagree with forward kinematics at link " +
                         std::to_string(sk.link(i).id));
  }
}

}  // namespace posefit
