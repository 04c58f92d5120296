#include "snce/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "snce/random.hpp"

namespace snce {

void ScenarioConfig::validate() const {
  if (n_agents < 2) throw std::invalid_argument("scenario needs at least 2 agents");
  if (steps < 2) throw std::invalid_argument("scenario needs at least 2 steps");
  const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(circle_radius) || !positive(preferred_speed) || !positive(frame_interval) ||
      !positive(repulsion_range)) {
    throw std::invalid_argument("scenario radius, speed, frame interval and repulsion range must be > 0");
  }
  if (!(repulsion_strength >= 0.0) || !std::isfinite(repulsion_strength)) {
    throw std::invalid_argument("repulsion strength must be >= 0");
  }
  if (!std::isfinite(tangential_bias)) throw std::invalid_argument("tangential bias must be finite");
  if (!(angle_jitter >= 0.0 && angle_jitter < 1.0)) throw std::invalid_argument("angle jitter must lie in [0, 1)");
}

void SplitSpec::validate() const {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in [0, 1)");
  }
}

ScenePtr rollout(std::span<const AgentState> starts, std::span<const AgentState> goals, const ScenarioConfig& cfg,
                 std::string scene_id) {
  cfg.validate();
  const std::size_t n = starts.size();
  if (goals.size() != n) throw std::invalid_argument("rollout needs one goal per agent");
  if (n < 2) throw std::invalid_argument("rollout needs at least 2 agents");

  const double dt = cfg.frame_interval;
  const double speed = cfg.preferred_speed;
  const double range = cfg.repulsion_range;

  std::vector<AgentState> pos(starts.begin(), starts.end());
  std::vector<std::optional<AgentState>> cells;
  cells.reserve(cfg.steps * n);
  for (const auto& p : pos) cells.emplace_back(p);

  std::vector<AgentState> vel(n);
  for (std::size_t step = 1; step < cfg.steps; ++step) {
    for (std::size_t i = 0; i < n; ++i) {
      const AgentState to_goal = goals[i] - pos[i];
      const double goal_dist = std::hypot(to_goal.x, to_goal.y);
      AgentState v{};
      AgentState heading{};
      if (goal_dist > 0.0) {
        heading = {to_goal.x / goal_dist, to_goal.y / goal_dist};
        const double s = std::min(speed, goal_dist / dt);
        v = {s * heading.x, s * heading.y};
      }

      bool repelled = false;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const AgentState away = pos[i] - pos[j];
        const double d = std::hypot(away.x, away.y);
        if (d <= 0.0 || d >= range) continue;
        const double magnitude = cfg.repulsion_strength * (1.0 / d - 1.0 / range);
        v.x += magnitude * away.x / d;
        v.y += magnitude * away.y / d;
        repelled = repelled || magnitude > 0.0;
      }
      if (repelled) {
        // Right-hand normal of the goal direction.
        v.x += cfg.tangential_bias * heading.y;
        v.y -= cfg.tangential_bias * heading.x;
      }

      const double norm = std::hypot(v.x, v.y);
      if (norm > speed) v = {v.x * speed / norm, v.y * speed / norm};
      vel[i] = v;
    }
    for (std::size_t i = 0; i < n; ++i) {
      pos[i] = {pos[i].x + vel[i].x * dt, pos[i].y + vel[i].y * dt};
      cells.emplace_back(pos[i]);
    }
  }
  return std::make_shared<const Scene>(cfg.steps, n, std::move(cells), dt, std::move(scene_id), "synthetic");
}

ScenePtr generate_scene(const ScenarioConfig& cfg, std::size_t scene_index) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed, {0x5ce7eULL, scene_index});
  const std::size_t n = cfg.n_agents;
  const double slot = 2.0 * std::numbers::pi / static_cast<double>(n);
  std::uniform_real_distribution<double> rotation(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> jitter(-0.5 * cfg.angle_jitter * slot, 0.5 * cfg.angle_jitter * slot);
  const double offset = rotation(rng);
  std::vector<AgentState> starts(n);
  std::vector<AgentState> goals(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = offset + slot * static_cast<double>(k) + jitter(rng);
    starts[k] = {cfg.circle_radius * std::cos(angle), cfg.circle_radius * std::sin(angle)};
    goals[k] = {-starts[k].x, -starts[k].y};
  }
  return rollout(starts, goals, cfg, "sim-" + std::to_string(cfg.seed) + "-" + std::to_string(scene_index));
}

DatasetSplit generate_dataset(const ScenarioConfig& cfg, const SplitSpec& split) {
  cfg.validate();
  split.validate();
  const std::size_t n = cfg.n_scenes;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(split.split_seed, {0x5b117ULL});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val =
      std::min(n, static_cast<std::size_t>(std::floor(split.validation_fraction * static_cast<double>(n) + 1e-9)));
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  DatasetSplit out;
  out.train.reserve(train_idx.size());
  out.validation.reserve(val_idx.size());
  for (auto i : train_idx) out.train.push_back(generate_scene(cfg, i));
  for (auto i : val_idx) out.validation.push_back(generate_scene(cfg, i));
  return out;
}

InteractionStats interaction_stats(std::span<const ScenePtr> scenes, double near_miss_distance) {
  InteractionStats stats;
  stats.near_miss_distance = near_miss_distance;
  if (scenes.empty()) return stats;
  std::size_t near = 0;
  for (const auto& scene : scenes) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < scene->num_frames(); ++f) {
      for (std::size_t a = 0; a < scene->num_agents(); ++a) {
        const auto& pa = scene->at(f, a);
        if (!pa) continue;
        for (std::size_t b = a + 1; b < scene->num_agents(); ++b) {
          if (const auto& pb = scene->at(f, b)) best = std::min(best, distance(*pa, *pb));
        }
      }
    }
    stats.min_distance_per_scene.push_back(best);
    if (best < near_miss_distance) ++near;
  }
  auto sorted = stats.min_distance_per_scene;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  stats.overall_min_distance = sorted.front();
  stats.median_min_distance = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  stats.mean_min_distance = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(m);
  stats.near_miss_fraction = static_cast<double>(near) / static_cast<double>(m);
  return stats;
}

}  // namespace snce
