#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "snce/scene.hpp"

namespace snce {

/// Circle-crossing crowd: agents start on a circle and walk to the antipodal
/// point under a goal-seeking velocity plus short-range repulsion.
struct ScenarioConfig {
  std::size_t n_agents = 5;
  std::size_t n_scenes = 500;
  double circle_radius = 4.0;
  double preferred_speed = 1.0;
  double frame_interval = 0.4;
  /// Recorded frames per scene, including the initial one.
  std::size_t steps = 20;
  double repulsion_strength = 1.0;
  double repulsion_range = 1.0;
  /// Sideways velocity (m/s) added while an agent feels repulsion; positive
  /// values veer to the right of the goal direction.
  double tangential_bias = 0.05;
  /// Start-angle jitter as a fraction of the even angular spacing 2 pi / n.
  double angle_jitter = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct SplitSpec {
  double validation_fraction = 0.3;
  std::uint64_t split_seed = 0;

  void validate() const;
  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

/// Integrates the crowd from explicit starts and goals for cfg.steps frames.
ScenePtr rollout(std::span<const AgentState> starts, std::span<const AgentState> goals, const ScenarioConfig& cfg,
                 std::string scene_id = {});

/// Scene `scene_index` of the family defined by cfg.seed.
ScenePtr generate_scene(const ScenarioConfig& cfg, std::size_t scene_index);

struct DatasetSplit {
  std::vector<ScenePtr> train;
  std::vector<ScenePtr> validation;
};

/// cfg.n_scenes scenes partitioned by a seeded shuffle; the validation share
/// is floor(fraction * n_scenes). Both parts are ordered by scene index.
DatasetSplit generate_dataset(const ScenarioConfig& cfg, const SplitSpec& split);

struct InteractionStats {
  /// Smallest pairwise distance seen in each scene.
  std::vector<double> min_distance_per_scene;
  double mean_min_distance = 0.0;
  double median_min_distance = 0.0;
  double overall_min_distance = 0.0;
  double near_miss_distance = 0.4;
  /// Share of scenes whose closest approach is below near_miss_distance.
  double near_miss_fraction = 0.0;
};

InteractionStats interaction_stats(std::span<const ScenePtr> scenes, double near_miss_distance = 0.4);

}  // namespace snce
