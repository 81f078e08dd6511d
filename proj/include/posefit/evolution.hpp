#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "posefit/objective.hpp"
#include "posefit/skeleton.hpp"

namespace posefit {

struct EAConfig {
  std::size_t population_size = 200;
  std::size_t elite_count = 2;
  std::size_t tournament_size = 3;
  double crossover_probability = 0.5;
  /// Per-parameter mutation probability; unset means 3 / dof_count.
  std::optional<double> mutation_rate;
  /// Gaussian std as a fraction of each parameter's range.
  double mutation_scale = 0.1;
  std::uint64_t eval_budget = 200000;
  std::uint64_t seed = 1;

  double effective_mutation_rate(const Skeleton& skeleton) const;
  /// Throws ConfigError naming the offending field.
  void validate() const;

  /// Flat key=value text; '#' starts a comment. Unknown keys are rejected.
  /// Keys present in the text override the matching fields of base.
  static EAConfig parse(const std::string& text, EAConfig base);
  static EAConfig parse(const std::string& text);
  static EAConfig load(const std::string& path, EAConfig base);
  static EAConfig load(const std::string& path);
  std::string to_text() const;
};

/// Parameter ranges the optimizer works in: skeleton limits plus a root-position box.
class SearchSpace {
 public:
  SearchSpace(Skeleton skeleton, Eigen::AlignedBox3d root_box);

  const Skeleton& skeleton() const { return skeleton_; }
  const Eigen::AlignedBox3d& root_box() const { return root_box_; }
  /// Mutation scale reference per parameter (box width, 1 for quaternion entries, limit width).
  double width(std::size_t param) const { return widths_[param]; }

 private:
  Skeleton skeleton_;
  Eigen::AlignedBox3d root_box_;
  std::vector<double> widths_;
};

/// Cloud bounding box grown by 10% of its extent plus the largest link radius per side.
Eigen::AlignedBox3d scene_box(const PointCloud& cloud, const Skeleton& skeleton);

struct Individual {
  PoseParams pose;
  std::optional<ObjectiveValue> fitness;  // nullopt until evaluated
};

struct GenerationRecord {
  std::size_t generation = 0;
  double best = 0.0;
  double mean = 0.0;
  std::uint64_t evaluations = 0;  // cumulative objective calls
};

struct RunStats {
  std::vector<GenerationRecord> generations;
  PoseParams best_pose;
  double best_value = 0.0;
  std::uint64_t evaluations = 0;    // full objective calls
  std::uint64_t point_queries = 0;  // point-to-model distance queries
  double wall_seconds = 0.0;
};

struct RunResult {
  PoseParams best;
  RunStats stats;
};

struct SearchOptions {
  /// Root-position sampling box; defaults to scene_box(cloud, skeleton).
  std::optional<Eigen::AlignedBox3d> root_box;
  /// Poses placed at the front of the initial population (evolve) or used as the
  /// first candidate (hill_climb).
  std::vector<PoseParams> initial;
  Execution exec = Execution::Parallel;
};

/// Each parameter mutates with probability mutation_rate by N(0, scale * width);
/// quaternion entries use scale itself. The result is clamped via clamp_pose.
PoseParams mutate(const PoseParams& pose, const SearchSpace& space, const EAConfig& cfg, Rng& rng);

/// Copies parent_a except the blocks of a uniformly chosen non-root link and its
/// whole subtree, which come from parent_b.
PoseParams crossover(const PoseParams& parent_a, const PoseParams& parent_b, const Skeleton& skeleton,
                     Rng& rng);
/// Deterministic variant used by the random one: swap the subtree rooted at link_index.
PoseParams crossover_at(const PoseParams& parent_a, const PoseParams& parent_b,
                        const Skeleton& skeleton, std::size_t link_index);

/// Index of the tournament winner among tournament_size distinct individuals;
/// lowest objective wins, ties go to the lower index.
std::size_t tournament_select(std::span<const double> fitness, std::size_t tournament_size, Rng& rng);

RunResult evolve(const Skeleton& skeleton, const PointCloud& cloud, const EAConfig& cfg,
                 const SearchOptions& options = {});

/// Greedy single-candidate search with a random restart after 500 straight rejections.
RunResult hill_climb(const Skeleton& skeleton, const PointCloud& cloud, const EAConfig& cfg,
                     const SearchOptions& options = {});

inline constexpr std::size_t kRestartAfterRejections = 500;

}  // namespace posefit
