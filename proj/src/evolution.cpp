#include "posefit/evolution.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "posefit/error.hpp"

namespace posefit {

double EAConfig::effective_mutation_rate(const Skeleton& skeleton) const {
  if (mutation_rate) return *mutation_rate;
  return std::min(1.0, 3.0 / static_cast<double>(dof_count(skeleton)));
}

void EAConfig::validate() const {
  if (population_size < 1) throw ConfigError("population_size must be >= 1");
  if (elite_count >= population_size) throw ConfigError("elite_count must be < population_size");
  if (tournament_size < 1 || tournament_size > population_size)
    throw ConfigError("tournament_size must be in [1, population_size]");
  if (!(crossover_probability >= 0.0 && crossover_probability <= 1.0))
    throw ConfigError("crossover_probability must be in [0, 1]");
  if (mutation_rate && !(*mutation_rate >= 0.0 && *mutation_rate <= 1.0))
    throw ConfigError("mutation_rate must be in [0, 1]");
  if (!(mutation_scale >= 0.0) || !std::isfinite(mutation_scale))
    throw ConfigError("mutation_scale must be >= 0");
  if (eval_budget < 1) throw ConfigError("eval_budget must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("invalid value '" + text + "' for " + key);
  return v;
}

}  // namespace

EAConfig EAConfig::parse(const std::string& text, EAConfig cfg) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "population_size") cfg.population_size = parse_value<std::size_t>(key, value);
    else if (key == "elite_count") cfg.elite_count = parse_value<std::size_t>(key, value);
    else if (key == "tournament_size") cfg.tournament_size = parse_value<std::size_t>(key, value);
    else if (key == "crossover_probability") cfg.crossover_probability = parse_value<double>(key, value);
    else if (key == "mutation_rate") {
      if (value == "auto") cfg.mutation_rate.reset();
      else cfg.mutation_rate = parse_value<double>(key, value);
    } else if (key == "mutation_scale") cfg.mutation_scale = parse_value<double>(key, value);
    else if (key == "eval_budget") cfg.eval_budget = parse_value<std::uint64_t>(key, value);
    else if (key == "seed") cfg.seed = parse_value<std::uint64_t>(key, value);
    else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return cfg;
}

EAConfig EAConfig::parse(const std::string& text) { return parse(text, EAConfig{}); }
EAConfig EAConfig::load(const std::string& path) { return load(path, EAConfig{}); }

EAConfig EAConfig::load(const std::string& path, EAConfig base) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), base);
}

std::string EAConfig::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "population_size=" << population_size << "\n"
      << "elite_count=" << elite_count << "\n"
      << "tournament_size=" << tournament_size << "\n"
      << "crossover_probability=" << crossover_probability << "\n"
      << "mutation_rate=";
  if (mutation_rate) out << *mutation_rate;
  else out << "auto";
  out << "\n"
      << "mutation_scale=" << mutation_scale << "\n"
      << "eval_budget=" << eval_budget << "\n"
      << "seed=" << seed << "\n";
  return out.str();
}

SearchSpace::SearchSpace(Skeleton skeleton, Eigen::AlignedBox3d root_box)
    : skeleton_(std::move(skeleton)), root_box_(root_box) {
  widths_.resize(skeleton_.dof());
  const Eigen::Vector3d extent = root_box_.sizes();
  for (std::size_t i = 0; i < widths_.size(); ++i) {
    switch (skeleton_.param_kind(i)) {
      case ParamKind::RootPosition: widths_[i] = extent[static_cast<Eigen::Index>(i)]; break;
      case ParamKind::RootOrientation: widths_[i] = 1.0; break;
      default: widths_[i] = skeleton_.param_limits(i)->width();
    }
  }
}

Eigen::AlignedBox3d scene_box(const PointCloud& cloud, const Skeleton& skeleton) {
  Eigen::AlignedBox3d box = cloud.bounds();
  const Eigen::Vector3d grow =
      (0.1 * box.sizes()).array() + skeleton.max_radius();
  return {box.min() - grow, box.max() + grow};
}

PoseParams mutate(const PoseParams& pose, const SearchSpace& space, const EAConfig& cfg, Rng& rng) {
  const Skeleton& skeleton = space.skeleton();
  check_pose(skeleton, pose);
  const double rate = cfg.effective_mutation_rate(skeleton);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  PoseParams out = pose;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (coin(rng) >= rate) continue;
    out[i] += gauss(rng) * cfg.mutation_scale * space.width(i);
  }
  return clamp_pose(skeleton, out);
}

PoseParams crossover_at(const PoseParams& parent_a, const PoseParams& parent_b,
                        const Skeleton& skeleton, std::size_t link_index) {
  check_pose(skeleton, parent_a);
  if (parent_b.size() != parent_a.size())
    throw InvalidInput("crossover parents have different parameter counts");
  PoseParams child = parent_a;
  for (std::size_t idx : skeleton.subtree(link_index)) {
    const std::size_t off = skeleton.param_offset(idx);
    const std::size_t n = skeleton.link(idx).joint.param_count();
    for (std::size_t k = off; k < off + n; ++k) child[k] = parent_b[k];
  }
  return child;
}

PoseParams crossover(const PoseParams& parent_a, const PoseParams& parent_b, const Skeleton& skeleton,
                     Rng& rng) {
  if (parent_b.size() != parent_a.size())
    throw InvalidInput("crossover parents have different parameter counts");
  if (skeleton.link_count() < 2) {
    check_pose(skeleton, parent_a);
    return parent_a;
  }
  std::uniform_int_distribution<std::size_t> pick(1, skeleton.link_count() - 1);
  return crossover_at(parent_a, parent_b, skeleton, pick(rng));
}

std::size_t tournament_select(std::span<const double> fitness, std::size_t tournament_size, Rng& rng) {
  const std::size_t n = fitness.size();
  const std::size_t k = std::min(tournament_size, n);
  // Partial Fisher-Yates draws k distinct contestants.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::size_t winner = std::numeric_limits<std::size_t>::max();
  for (std::size_t j = 0; j < k; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, n - 1);
    std::swap(idx[j], idx[pick(rng)]);
    const std::size_t c = idx[j];
    if (winner == std::numeric_limits<std::size_t>::max() || fitness[c] < fitness[winner] ||
        (fitness[c] == fitness[winner] && c < winner))
      winner = c;
  }
  return winner;
}

namespace {

using Clock = std::chrono::steady_clock;

void check_run(const Skeleton& skeleton, const EAConfig& cfg, const SearchOptions& options) {
  cfg.validate();
  for (const auto& p : options.initial) check_pose(skeleton, p);
}

// Stable order of population indices by fitness; ties keep the lower index first.
std::vector<std::size_t> rank(std::span<const double> fitness) {
  std::vector<std::size_t> order(fitness.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });
  return order;
}

GenerationRecord record(std::size_t gen, std::span<const double> fitness, std::uint64_t evals) {
  double best = fitness[0], sum = 0.0;
  for (double f : fitness) {
    best = std::min(best, f);
    sum += f;
  }
  return {gen, best, sum / static_cast<double>(fitness.size()), evals};
}

}  // namespace

RunResult evolve(const Skeleton& skeleton, const PointCloud& cloud, const EAConfig& cfg,
                 const SearchOptions& options) {
  check_run(skeleton, cfg, options);
  if (cfg.eval_budget < cfg.population_size)
    throw ConfigError("eval_budget must be at least population_size");
  const auto t0 = Clock::now();
  const SearchSpace space(skeleton, options.root_box.value_or(scene_box(cloud, skeleton)));
  Rng rng(cfg.seed);

  const std::size_t pop = cfg.population_size;
  std::vector<PoseParams> poses;
  poses.reserve(pop);
  for (std::size_t i = 0; i < pop; ++i) {
    poses.push_back(i < options.initial.size() ? clamp_pose(skeleton, options.initial[i])
                                               : random_pose(skeleton, space.root_box(), rng));
  }

  RunStats stats;
  auto values = evaluate_batch(skeleton, poses, cloud, options.exec);
  std::vector<double> fitness(pop);
  for (std::size_t i = 0; i < pop; ++i) fitness[i] = values[i].value;
  stats.evaluations = pop;
  stats.generations.push_back(record(0, fitness, stats.evaluations));

  auto best_it = std::min_element(fitness.begin(), fitness.end());
  PoseParams best_pose = poses[static_cast<std::size_t>(best_it - fitness.begin())];
  double best_value = *best_it;

  const std::size_t offspring = pop - cfg.elite_count;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::size_t gen = 0;
  // An objective of exactly zero cannot be improved on.
  while (best_value > 0.0 && offspring > 0 && stats.evaluations + offspring <= cfg.eval_budget) {
    ++gen;
    const auto order = rank(fitness);
    std::vector<PoseParams> next;
    std::vector<double> next_fitness;
    next.reserve(pop);
    for (std::size_t e = 0; e < cfg.elite_count; ++e) {
      next.push_back(poses[order[e]]);
      next_fitness.push_back(fitness[order[e]]);
    }

    std::vector<PoseParams> children;
    children.reserve(offspring);
    for (std::size_t c = 0; c < offspring; ++c) {
      const std::size_t a = tournament_select(fitness, cfg.tournament_size, rng);
      PoseParams child = poses[a];
      if (coin(rng) < cfg.crossover_probability) {
        const std::size_t b = tournament_select(fitness, cfg.tournament_size, rng);
        child = crossover(poses[a], poses[b], skeleton, rng);
      }
      children.push_back(mutate(child, space, cfg, rng));
    }
    values = evaluate_batch(skeleton, children, cloud, options.exec);
    stats.evaluations += offspring;
    for (std::size_t c = 0; c < offspring; ++c) {
      next.push_back(std::move(children[c]));
      next_fitness.push_back(values[c].value);
    }
    poses = std::move(next);
    fitness = std::move(next_fitness);
    stats.generations.push_back(record(gen, fitness, stats.evaluations));

    for (std::size_t i = 0; i < pop; ++i) {
      if (fitness[i] < best_value) {
        best_value = fitness[i];
        best_pose = poses[i];
      }
    }
  }

  stats.best_pose = best_pose;
  stats.best_value = best_value;
  stats.point_queries = stats.evaluations * cloud.size();
  stats.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return {best_pose, std::move(stats)};
}

RunResult hill_climb(const Skeleton& skeleton, const PointCloud& cloud, const EAConfig& cfg,
                     const SearchOptions& options) {
  check_run(skeleton, cfg, options);
  const auto t0 = Clock::now();
  const SearchSpace space(skeleton, options.root_box.value_or(scene_box(cloud, skeleton)));
  Rng rng(cfg.seed);
  const auto eval = [&](const PoseParams& p) {
    return evaluate(skeleton, p, cloud, options.exec).value;
  };

  PoseParams current = options.initial.empty() ? random_pose(skeleton, space.root_box(), rng)
                                               : clamp_pose(skeleton, options.initial.front());
  double current_value = eval(current);
  RunStats stats;
  stats.evaluations = 1;
  PoseParams best_pose = current;
  double best_value = current_value;

  // One record per population_size evaluations keeps logs comparable with evolve.
  const std::uint64_t stride = std::max<std::size_t>(cfg.population_size, 1);
  std::size_t gen = 0;
  stats.generations.push_back({gen, best_value, current_value, stats.evaluations});

  std::size_t rejections = 0;
  while (best_value > 0.0 && stats.evaluations < cfg.eval_budget) {
    if (rejections >= kRestartAfterRejections) {
      current = random_pose(skeleton, space.root_box(), rng);
      current_value = eval(current);
      rejections = 0;
    } else {
      PoseParams candidate = mutate(current, space, cfg, rng);
      const double v = eval(candidate);
      if (v < current_value) {
        current = std::move(candidate);
        current_value = v;
        rejections = 0;
      } else {
        ++rejections;
      }
    }
    ++stats.evaluations;
    if (current_value < best_value) {
      best_value = current_value;
      best_pose = current;
    }
    if (stats.evaluations % stride == 0 || stats.evaluations == cfg.eval_budget)
      stats.generations.push_back({++gen, best_value, current_value, stats.evaluations});
  }
  if (stats.generations.back().evaluations != stats.evaluations)
    stats.generations.push_back({++gen, best_value, current_value, stats.evaluations});

  stats.best_pose = best_pose;
  stats.best_value = best_value;
  stats.point_queries = stats.evaluations * cloud.size();
  stats.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return {best_pose, std::move(stats)};
}

}  // namespace posefit
