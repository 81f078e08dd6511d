#include "posefit/syntheval.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "posefit/error.hpp"
#include "posefit/posefile.hpp"

namespace posefit {

PointCloud add_noise(const PointCloud& cloud, double depth_sigma_mm, Rng& rng) {
  if (!(depth_sigma_mm >= 0.0)) throw InvalidInput("noise sigma must be >= 0");
  if (depth_sigma_mm == 0.0) return cloud;
  std::normal_distribution<double> gauss(0.0, depth_sigma_mm / 1000.0);
  std::vector<Point3> pts = cloud.points();
  for (auto& p : pts) {
    const double n = p.norm();
    const double offset = gauss(rng);
    if (n > 0.0) p += (offset / n) * p;
  }
  return PointCloud(std::move(pts));
}

namespace {

void check_models(const PosedModel& estimated, const PosedModel& truth, double threshold) {
  if (estimated.segments.size() != truth.segments.size())
    throw InvalidInput("models have different link counts (" +
                       std::to_string(estimated.segments.size()) + " vs " +
                       std::to_string(truth.segments.size()) + ")");
  if (!(threshold > 0.0)) throw InvalidInput("accuracy threshold must be positive");
}

LinkError compare(const Segment& est, const Segment& truth, double threshold, bool either_order) {
  LinkError e{truth.link_id, (est.start - truth.start).norm(), (est.end - truth.end).norm(), false};
  if (either_order) {
    const double s = (est.start - truth.end).norm(), t = (est.end - truth.start).norm();
    if (std::max(s, t) < std::max(e.start_error, e.end_error)) {
      e.start_error = s;
      e.end_error = t;
    }
  }
  e.correct = e.start_error <= threshold && e.end_error <= threshold;
  return e;
}

AccuracyReport finish(std::vector<LinkError> links, double threshold) {
  AccuracyReport r;
  const auto n = std::count_if(links.begin(), links.end(), [](const LinkError& e) { return e.correct; });
  r.fraction_correct = static_cast<double>(n) / static_cast<double>(links.size());
  r.links = std::move(links);
  r.threshold = threshold;
  return r;
}

}  // namespace

AccuracyReport link_accuracy(const PosedModel& estimated, const PosedModel& truth, double threshold) {
  check_models(estimated, truth, threshold);
  std::vector<LinkError> links;
  for (std::size_t i = 0; i < truth.segments.size(); ++i)
    links.push_back(compare(estimated.segments[i], truth.segments[i], threshold, false));
  return finish(std::move(links), threshold);
}

AccuracyReport link_accuracy_permuted(const PosedModel& estimated, const PosedModel& truth,
                                      const Skeleton& skeleton, double threshold) {
  check_models(estimated, truth, threshold);
  if (truth.segments.size() != skeleton.link_count())
    throw InvalidInput("model does not match the skeleton's link count");

  // truth link index -> estimated link index
  std::vector<std::size_t> assign(truth.segments.size());
  std::iota(assign.begin(), assign.end(), std::size_t{0});
  std::vector<bool> symmetric(truth.segments.size(), false);

  for (const auto& group : skeleton.symmetry()) {
    if (group.size() > 8) throw InvalidInput("symmetry group too large to enumerate");
    std::vector<std::vector<std::size_t>> members;
    for (const auto& m : group) {
      std::vector<std::size_t> idx;
      for (int id : m) {
        idx.push_back(*skeleton.index_of(id));
        symmetric[idx.back()] = true;
      }
      members.push_back(std::move(idx));
    }
    std::vector<std::size_t> perm(members.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<std::size_t> best_perm = perm;
    long best_correct = -1;
    double best_error = 0.0;
    do {
      long correct = 0;
      double error = 0.0;
      for (std::size_t j = 0; j < members.size(); ++j) {
        for (std::size_t k = 0; k < members[j].size(); ++k) {
          const auto e = compare(estimated.segments[members[perm[j]][k]],
                                 truth.segments[members[j][k]], threshold, true);
          correct += e.correct ? 1 : 0;
          error += e.start_error + e.end_error;
        }
      }
      if (correct > best_correct || (correct == best_correct && error < best_error)) {
        best_correct = correct;
        best_error = error;
        best_perm = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (std::size_t j = 0; j < members.size(); ++j)
      for (std::size_t k = 0; k < members[j].size(); ++k)
        assign[members[j][k]] = members[best_perm[j]][k];
  }

  std::vector<LinkError> links;
  for (std::size_t i = 0; i < truth.segments.size(); ++i)
    links.push_back(compare(estimated.segments[assign[i]], truth.segments[i], threshold, symmetric[i]));
  return finish(std::move(links), threshold);
}

double mean_link_length(const PosedModel& model) {
  if (model.segments.empty()) throw InvalidInput("empty model");
  double sum = 0.0;
  for (const auto& s : model.segments) sum += (s.end - s.start).norm();
  return sum / static_cast<double>(model.segments.size());
}

std::string Manifest::resolve(const std::string& relative) const {
  const std::filesystem::path p(relative);
  if (p.is_absolute() || directory.empty()) return p.string();
  return (std::filesystem::path(directory) / p).string();
}

std::string Manifest::case_name(const BenchmarkCase& c) {
  return std::filesystem::path(c.cloud).stem().string();
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest '" + path + "'");
  Manifest m;
  m.directory = std::filesystem::path(path).parent_path().string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ss(line);
    BenchmarkCase c;
    if (!(ss >> c.cloud)) continue;
    std::string extra;
    if (!(ss >> c.truth >> c.intrinsics) || (ss >> extra))
      throw FormatError("'" + path + "' line " + std::to_string(lineno) +
                        ": expected '<cloud.xyz> <truth_pose.json> <camera.intr>'");
    m.cases.push_back(std::move(c));
  }
  return m;
}

void save_manifest(const Manifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write manifest '" + path + "'");
  for (const auto& c : manifest.cases) out << c.cloud << ' ' << c.truth << ' ' << c.intrinsics << '\n';
  if (!out) throw FormatError("failed writing '" + path + "'");
}

std::vector<double> view_elevations(int n_views, double max_elevation_deg) {
  std::vector<double> out;
  for (int k = 0; k < n_views; ++k)
    out.push_back(n_views == 1 ? 0.0 : max_elevation_deg * k / (n_views - 1));
  return out;
}

namespace {

CameraSpec frame_model(const PosedModel& model, double elevation_deg, const BenchmarkOptions& opt) {
  Eigen::AlignedBox3d box;
  for (const auto& s : model.segments) {
    box.extend(s.start);
    box.extend(s.end);
  }
  const Point3 center = box.center();
  double radius = 0.0;
  for (const auto& s : model.segments)
    radius = std::max({radius, (s.start - center).norm() + s.radius, (s.end - center).norm() + s.radius});

  CameraSpec cam;
  cam.width = opt.width;
  cam.height = opt.height;
  cam.intrinsics = {opt.focal, opt.focal, (opt.width - 1) / 2.0, (opt.height - 1) / 2.0};
  const double half_fov = std::atan(std::min(opt.width, opt.height) / (2.0 * opt.focal));
  const double distance = 1.05 * radius / std::sin(half_fov);
  const double e = elevation_deg * std::numbers::pi / 180.0;
  const Point3 eye = center + distance * Point3(-std::cos(e), 0.0, std::sin(e));
  cam.world_to_camera = CameraSpec::look_at(eye, center);
  return cam;
}

}  // namespace

Manifest make_benchmark(const Skeleton& skeleton, int n_poses, int n_views, std::uint64_t seed,
                        const std::string& outdir, const BenchmarkOptions& options) {
  if (n_poses <= 0 || n_views <= 0) throw InvalidInput("pose and view counts must be positive");
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec || !std::filesystem::is_directory(outdir))
    throw FormatError("cannot create output directory '" + outdir + "'");

  Rng rng(seed);
  Manifest manifest;
  manifest.directory = outdir;
  const Eigen::AlignedBox3d origin_box(Point3::Zero(), Point3::Zero());
  const auto elevations = view_elevations(n_views, options.max_elevation_deg);
  std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);

  int index = 0;
  for (int p = 0; p < n_poses; ++p) {
    PoseParams pose = random_pose(skeleton, origin_box, rng);
    const Eigen::Quaterniond yaw(Eigen::AngleAxisd(heading(rng), Eigen::Vector3d::UnitZ()));
    pose.set_root_orientation((yaw * skeleton.rest_orientation()).normalized());
    const PosedModel world = forward_kinematics(skeleton, pose);

    for (double elevation : elevations) {
      const CameraSpec cam = frame_model(world, elevation, options);
      Render render = render_cloud(skeleton, pose, cam);
      PointCloud cloud = std::move(render.cloud);
      if (options.noise_mm > 0.0) cloud = add_noise(cloud, options.noise_mm, rng);

      char stem[32];
      std::snprintf(stem, sizeof stem, "case_%03d", index++);
      const std::string name(stem);
      BenchmarkCase c{name + ".xyz", name + ".truth.json", name + ".intr"};
      save_xyz(cloud, manifest.resolve(c.cloud));
      save_depth(render.image, manifest.resolve(name + ".pgm"));  // also writes <name>.intr

      // Scored against the cloud as it reads back from disk.
      const PointCloud stored = load_xyz(manifest.resolve(c.cloud));
      const PoseParams truth = transform_pose(pose, cam.world_to_camera);
      PoseFile::make(skeleton, truth, evaluate(skeleton, truth, stored).value, seed, 0)
          .save(manifest.resolve(c.truth));
      manifest.cases.push_back(std::move(c));
    }
  }
  save_manifest(manifest, manifest.resolve("manifest.txt"));
  return manifest;
}

}  // namespace posefit
