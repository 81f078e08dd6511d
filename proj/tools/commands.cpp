#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "posefit/depthio.hpp"
#include "posefit/error.hpp"
#include "posefit/evolution.hpp"
#include "posefit/posefile.hpp"
#include "posefit/syntheval.hpp"

namespace posefit::cli {

namespace {

namespace fs = std::filesystem;

struct SearchFlags {
  std::string skeleton;
  std::string cloud;
  std::string depth;
  double far_mm = 4000.0;
  std::string config;
  std::string out;
  std::string stats;
  std::string export_ply;
  std::optional<double> sigma;
  std::optional<std::uint64_t> budget;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> population;
  std::optional<std::size_t> elite;
  std::optional<std::size_t> tournament;
  std::optional<double> crossover;
  std::optional<double> mutation_rate;
  std::optional<double> mutation_scale;
};

void add_ea_flags(CLI::App* cmd, SearchFlags& f) {
  cmd->add_option("--budget", f.budget, "Objective evaluations [>= population]")
      ->check(CLI::Range(std::uint64_t{1}, std::numeric_limits<std::uint64_t>::max()));
  cmd->add_option("--seed", f.seed, "Random seed (64-bit)");
  cmd->add_option("--config", f.config, "key=value optimizer config file");
  cmd->add_option("--population", f.population, "Population size [>= 1]")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24));
  cmd->add_option("--elite", f.elite, "Elite count [0, population)");
  cmd->add_option("--tournament", f.tournament, "Tournament size [1, population]")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24));
  cmd->add_option("--crossover", f.crossover, "Crossover probability [0, 1]")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--mutation-rate", f.mutation_rate, "Per-parameter mutation probability [0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--mutation-scale", f.mutation_scale, "Mutation std as fraction of range [0, 10]")
      ->check(CLI::Range(0.0, 10.0));
}

void add_search_flags(CLI::App* cmd, SearchFlags& f) {
  cmd->add_option("--skeleton", f.skeleton, "Skeleton JSON file")->required();
  auto* cloud = cmd->add_option("--cloud", f.cloud, ".xyz point cloud (meters, camera frame)");
  auto* depth = cmd->add_option("--depth", f.depth, "16-bit PGM depth image with .intr sidecar");
  cloud->excludes(depth);
  cmd->add_option("--far-mm", f.far_mm, "Background far plane for --depth [1, 65536] mm")
      ->check(CLI::Range(1.0, 65536.0));
  cmd->add_option("--out", f.out, "Output pose file (JSON)")->required();
  cmd->add_option("--stats", f.stats, "Per-generation CSV (default: <out stem>.stats.csv)");
  cmd->add_option("--sigma", f.sigma, "Override the loss scale sigma (meters, > 0)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--export-ply", f.export_ply, "Write cloud and posed model as a PLY point set");
  add_ea_flags(cmd, f);
}

EAConfig build_config(const SearchFlags& f) {
  EAConfig cfg;
  if (!f.config.empty()) cfg = EAConfig::load(f.config, cfg);
  if (f.budget) cfg.eval_budget = *f.budget;
  if (f.seed) cfg.seed = *f.seed;
  if (f.population) cfg.population_size = *f.population;
  if (f.elite) cfg.elite_count = *f.elite;
  if (f.tournament) cfg.tournament_size = *f.tournament;
  if (f.crossover) cfg.crossover_probability = *f.crossover;
  if (f.mutation_rate) cfg.mutation_rate = *f.mutation_rate;
  if (f.mutation_scale) cfg.mutation_scale = *f.mutation_scale;
  cfg.validate();
  return cfg;
}

PointCloud read_cloud(const SearchFlags& f) {
  if (f.cloud.empty() && f.depth.empty()) throw ConfigError("one of --cloud or --depth is required");
  if (!f.cloud.empty()) return load_xyz(f.cloud);
  const DepthImage img = load_depth(f.depth);
  return to_point_cloud(img, background_subtract(img, f.far_mm));
}

void write_stats(const RunStats& stats, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write stats file '" + path + "'");
  out << std::setprecision(17) << "generation,best,mean,evals\n";
  for (const auto& g : stats.generations)
    out << g.generation << ',' << g.best << ',' << g.mean << ',' << g.evaluations << '\n';
  if (!out) throw FormatError("failed writing '" + path + "'");
}

void write_ply(const PointCloud& cloud, const PosedModel& model, const std::string& path) {
  std::vector<std::pair<Point3, int>> verts;
  for (const auto& p : cloud.points()) verts.emplace_back(p, 0);
  for (const auto& s : model.segments) {
    const double len = (s.end - s.start).norm();
    const int steps = std::max(2, static_cast<int>(std::ceil(len / 0.005)));
    for (int k = 0; k <= steps; ++k) verts.emplace_back(s.start + (s.end - s.start) * (double(k) / steps), 1);
  }
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write PLY file '" + path + "'");
  out << "ply\nformat ascii 1.0\nelement vertex " << verts.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  out << std::setprecision(9);
  for (const auto& [p, kind] : verts)
    out << p.x() << ' ' << p.y() << ' ' << p.z() << (kind == 0 ? " 160 160 160\n" : " 230 40 40\n");
  if (!out) throw FormatError("failed writing '" + path + "'");
}

std::string default_stats_path(const std::string& out) {
  fs::path p(out);
  const std::string stem = p.stem().string();
  return (p.parent_path() / (stem + ".stats.csv")).string();
}

int run_search(const SearchFlags& f, bool baseline, std::ostream& out) {
  const EAConfig cfg = build_config(f);
  const Skeleton skeleton = load_skeleton(f.skeleton);
  PointCloud cloud = read_cloud(f);
  if (f.sigma) cloud = cloud.with_sigma(*f.sigma);
  if (!baseline && cfg.eval_budget < cfg.population_size)
    throw ConfigError("--budget must be at least the population size");

  const RunResult result = baseline ? hill_climb(skeleton, cloud, cfg) : evolve(skeleton, cloud, cfg);
  PoseFile::make(skeleton, result.best, result.stats.best_value, cfg.seed, result.stats.evaluations)
      .save(f.out);
  write_stats(result.stats, f.stats.empty() ? default_stats_path(f.out) : f.stats);
  if (!f.export_ply.empty()) write_ply(cloud, forward_kinematics(skeleton, result.best), f.export_ply);
  out << std::setprecision(9) << (baseline ? "hill_climb" : "evolve") << ": objective "
      << result.stats.best_value << " after " << result.stats.evaluations << " evaluations ("
      << result.stats.point_queries << " point queries, " << result.stats.wall_seconds << " s)\n";
  return kOk;
}

struct SynthFlags {
  std::string skeleton;
  int poses = 4;
  int views = 5;
  std::uint64_t seed = 1;
  double noise = 0.0;
  std::string outdir;
  BenchmarkOptions options;
};

struct EvalFlags {
  std::string manifest;
  std::string results;
  double threshold = 0.25;
  std::string skeleton;
};

std::string result_path(const std::string& dir, const BenchmarkCase& c) {
  return (fs::path(dir) / (Manifest::case_name(c) + ".pose.json")).string();
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(9) << v;
  return s.str();
}

int run_eval(const EvalFlags& f, std::ostream& out, std::ostream& err) {
  const Manifest manifest = load_manifest(f.manifest);
  std::optional<Skeleton> skeleton;
  if (!f.skeleton.empty()) skeleton = load_skeleton(f.skeleton);

  out << "case,status,fraction_correct,fraction_correct_permuted,max_endpoint_error\n";
  double sum = 0.0, sum_perm = 0.0;
  std::size_t present = 0, missing = 0;
  for (const auto& c : manifest.cases) {
    const std::string name = Manifest::case_name(c);
    const std::string path = result_path(f.results, c);
    if (!fs::exists(path)) {
      ++missing;
      out << name << ",MISSING,,,\n";
      continue;
    }
    const PoseFile truth = PoseFile::load(manifest.resolve(c.truth));
    const PoseFile est = PoseFile::load(path);
    if (skeleton) {
      truth.check_against(*skeleton);
      est.check_against(*skeleton);
    }
    const PosedModel truth_model = truth.model();
    const double threshold = f.threshold * mean_link_length(truth_model);
    const AccuracyReport strict = link_accuracy(est.model(), truth_model, threshold);
    const AccuracyReport perm =
        skeleton ? link_accuracy_permuted(est.model(), truth_model, *skeleton, threshold) : strict;
    double worst = 0.0;
    for (const auto& e : strict.links) worst = std::max({worst, e.start_error, e.end_error});
    out << name << ",OK," << fmt(strict.fraction_correct) << ',' << fmt(perm.fraction_correct) << ','
        << fmt(worst) << '\n';
    sum += strict.fraction_correct;
    sum_perm += perm.fraction_correct;
    ++present;
  }
  if (present > 0)
    out << "mean," << present << ',' << fmt(sum / present) << ',' << fmt(sum_perm / present) << ",\n";
  else
    out << "mean,0,,,\n";
  if (missing > 0) err << "warning: " << missing << " case(s) without results\n";
  return kOk;
}

struct ReportFlags {
  std::string manifest;
  std::string skeleton;
  std::string results;
  double threshold = 0.25;
  SearchFlags ea;
};

int run_bench_report(const ReportFlags& f, std::ostream& out) {
  EAConfig cfg = build_config(f.ea);
  const Skeleton skeleton = load_skeleton(f.skeleton);
  const Manifest manifest = load_manifest(f.manifest);
  if (cfg.eval_budget < cfg.population_size)
    throw ConfigError("--budget must be at least the population size");

  out << "case,method,objective,truth_objective,fraction_correct,fraction_correct_permuted,seconds\n";
  for (const char* method : {"evolve", "hill_climb"}) {
    const std::string dir = (fs::path(f.results) / method).string();
    fs::create_directories(dir);
    double total = 0.0, total_perm = 0.0;
    for (const auto& c : manifest.cases) {
      const PointCloud cloud = load_xyz(manifest.resolve(c.cloud));
      const PoseFile truth = PoseFile::load(manifest.resolve(c.truth));
      truth.check_against(skeleton);
      const bool ea = std::string_view(method) == "evolve";
      const RunResult r = ea ? evolve(skeleton, cloud, cfg) : hill_climb(skeleton, cloud, cfg);
      PoseFile::make(skeleton, r.best, r.stats.best_value, cfg.seed, r.stats.evaluations)
          .save(result_path(dir, c));
      const PosedModel truth_model = truth.model();
      const PosedModel est = forward_kinematics(skeleton, r.best);
      const double threshold = f.threshold * mean_link_length(truth_model);
      const double strict = link_accuracy(est, truth_model, threshold).fraction_correct;
      const double perm = link_accuracy_permuted(est, truth_model, skeleton, threshold).fraction_correct;
      total += strict;
      total_perm += perm;
      out << Manifest::case_name(c) << ',' << method << ',' << fmt(r.stats.best_value) << ','
          << fmt(truth.objective) << ',' << fmt(strict) << ',' << fmt(perm) << ','
          << fmt(r.stats.wall_seconds) << '\n';
    }
    const double n = static_cast<double>(std::max<std::size_t>(manifest.cases.size(), 1));
    out << "mean," << method << ",,," << fmt(total / n) << ',' << fmt(total_perm / n) << ",\n";
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pose estimation of arbitrary kinematic skeletons from a single depth image"};
  app.require_subcommand(1);

  SearchFlags estimate_flags, baseline_flags;
  add_search_flags(app.add_subcommand("estimate", "Fit a pose with the evolutionary optimizer"),
                   estimate_flags);
  add_search_flags(app.add_subcommand("baseline", "Fit a pose with random-restart hill climbing"),
                   baseline_flags);

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic benchmark with ground truth");
  synth_cmd->add_option("--skeleton", synth.skeleton, "Skeleton JSON file")->required();
  synth_cmd->add_option("--poses", synth.poses, "Random poses [>= 1]")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--views", synth.views, "Camera elevations per pose [>= 1]")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed, "Random seed (64-bit)");
  synth_cmd->add_option("--noise", synth.noise, "Depth noise std along rays [0, 100] mm")
      ->check(CLI::Range(0.0, 100.0));
  synth_cmd->add_option("--outdir", synth.outdir, "Output directory")->required();
  synth_cmd->add_option("--width", synth.options.width, "Image width [8, 4096] px")
      ->check(CLI::Range(8, 4096));
  synth_cmd->add_option("--height", synth.options.height, "Image height [8, 4096] px")
      ->check(CLI::Range(8, 4096));
  synth_cmd->add_option("--focal", synth.options.focal, "Focal length [1, 1e5] px")
      ->check(CLI::Range(1.0, 1e5));

  EvalFlags eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score result pose files against benchmark truth");
  eval_cmd->add_option("--manifest", eval.manifest, "Benchmark manifest")->required();
  eval_cmd->add_option("--results", eval.results, "Directory of <case>.pose.json results")->required();
  eval_cmd->add_option("--threshold", eval.threshold,
                       "Endpoint threshold as a fraction of mean true link length (0, 10]")
      ->check(CLI::Range(1e-9, 10.0));
  eval_cmd->add_option("--skeleton", eval.skeleton,
                       "Skeleton file; validates poses and enables symmetric matching");

  ReportFlags report;
  auto* report_cmd =
      app.add_subcommand("bench-report", "Run both optimizers on every manifest case and compare");
  report_cmd->add_option("--manifest", report.manifest, "Benchmark manifest")->required();
  report_cmd->add_option("--skeleton", report.skeleton, "Skeleton JSON file")->required();
  report_cmd->add_option("--results", report.results, "Output directory for pose files")->required();
  report_cmd->add_option("--threshold", report.threshold,
                         "Endpoint threshold as a fraction of mean true link length (0, 10]")
      ->check(CLI::Range(1e-9, 10.0));
  add_ea_flags(report_cmd, report.ea);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return kUsage;
  }

  try {
    if (app.got_subcommand("estimate")) return run_search(estimate_flags, false, out);
    if (app.got_subcommand("baseline")) return run_search(baseline_flags, true, out);
    if (app.got_subcommand("synth")) {
      BenchmarkOptions opt = synth.options;
      opt.noise_mm = synth.noise;
      const Skeleton skeleton = load_skeleton(synth.skeleton);
      const Manifest m = make_benchmark(skeleton, synth.poses, synth.views, synth.seed, synth.outdir, opt);
      out << "wrote " << m.cases.size() << " cases to "
          << (fs::path(synth.outdir) / "manifest.txt").string() << "\n";
      return kOk;
    }
    if (app.got_subcommand("eval")) return run_eval(eval, out, err);
    if (app.got_subcommand("bench-report")) return run_bench_report(report, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kUsage;
}

}  // namespace posefit::cli
