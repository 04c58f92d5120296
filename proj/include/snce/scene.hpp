#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace snce {

/// Planar position of one agent at one frame, in meters.
struct AgentState {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

inline AgentState operator+(AgentState a, AgentState b) { return {a.x + b.x, a.y + b.y}; }
inline AgentState operator-(AgentState a, AgentState b) { return {a.x - b.x, a.y - b.y}; }

double distance(AgentState a, AgentState b);

using Trajectory = std::vector<AgentState>;

/// One observation as it appears in a trajectory file.
struct TrackRecord {
  std::int64_t frame = 0;
  std::int64_t agent = 0;
  double x = 0.0;
  double y = 0.0;
};

/// Time-major grid of optional agent positions.
///
/// Invariants (checked by the constructor): at least two frames and two
/// agents, a positive frame interval, finite coordinates, and every agent's
/// present cells forming one contiguous run of frames.
class Scene {
 public:
  Scene(std::size_t num_frames, std::size_t num_agents,
        std::vector<std::optional<AgentState>> cells, double frame_interval,
        std::string scene_id = {}, std::string dataset = {});

  std::size_t num_frames() const { return num_frames_; }
  std::size_t num_agents() const { return num_agents_; }
  double frame_interval() const { return frame_interval_; }
  const std::string& id() const { return scene_id_; }
  const std::string& dataset() const { return dataset_; }

  const std::optional<AgentState>& at(std::size_t frame, std::size_t agent) const;
  bool present(std::size_t frame, std::size_t agent) const { return at(frame, agent).has_value(); }

  /// Half-open frame range [first, last) during which `agent` is present.
  /// Empty (first == last) for an agent that never appears.
  std::pair<std::size_t, std::size_t> presence(std::size_t agent) const;

  /// Geometry-only equality; identifiers are ignored.
  bool same_geometry(const Scene& other) const;

 private:
  std::size_t num_frames_;
  std::size_t num_agents_;
  std::vector<std::optional<AgentState>> cells_;
  double frame_interval_;
  std::string scene_id_;
  std::string dataset_;
  std::vector<std::pair<std::size_t, std::size_t>> presence_;
};

using ScenePtr = std::shared_ptr<const Scene>;

/// Assembles a scene from sparse records. Frames are shifted so the earliest
/// record lands on frame 0; agent indices are kept as given.
ScenePtr build_scene(std::span<const TrackRecord> records, double frame_interval,
                     std::string scene_id = {}, std::string dataset = {});

/// Inverse of build_scene: one record per present cell, frame-major.
std::vector<TrackRecord> scene_records(const Scene& scene);

/// One forecasting instance. `current_frame()` is the last observed frame t;
/// offsets used throughout the library are relative to it, so offset 0 is t,
/// negative offsets reach back into the observation and 1..pred_len is the
/// prediction window.
struct Sample {
  ScenePtr scene;
  std::size_t primary = 0;
  std::size_t obs_len = 0;
  std::size_t pred_len = 0;
  std::size_t start_frame = 0;

  std::size_t current_frame() const { return start_frame + obs_len - 1; }
  std::size_t frame_at(std::ptrdiff_t offset) const;
  AgentState primary_at(std::ptrdiff_t offset) const;
  AgentState anchor() const { return primary_at(0); }
  Trajectory observed() const;
  Trajectory future() const;
};

/// Throws std::invalid_argument if the sample violates its invariants.
void validate_sample(const Sample& sample);

/// Every (window start, agent) pair whose agent is present throughout the
/// window, frame-major then agent-ascending.
std::vector<Sample> slice_samples(const ScenePtr& scene, std::size_t obs_len, std::size_t pred_len,
                                  std::size_t stride);

struct Neighbor {
  std::size_t agent = 0;
  AgentState state;
};

/// Agents other than the primary present at `offset` (relative to t),
/// ascending by index.
std::vector<Neighbor> neighbors_at(const Sample& sample, std::ptrdiff_t offset);

}  // namespace snce
