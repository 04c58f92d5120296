#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "snce/scene.hpp"

namespace snce {

enum class ColumnOrder { frame_agent_x_y, frame_agent_y_x };

std::string to_string(ColumnOrder order);
ColumnOrder column_order_from_string(const std::string& name);

/// Whitespace-separated text, one observation per line, four numeric columns.
/// Blank lines and lines starting with '#' are ignored.
struct TrajectoryFileSpec {
  ColumnOrder order = ColumnOrder::frame_agent_x_y;
  double frame_interval = 0.4;
  /// Keep every k-th frame of the detected frame grid.
  std::size_t subsample = 1;
};

/// Frame numbers are mapped onto a grid whose step is the gcd of their
/// differences, so missing frames stay visible. Each track is split at every
/// gap into separate agents, numbered by (original id, piece start).
ScenePtr parse_trajectory_file(std::istream& in, const TrajectoryFileSpec& spec, std::string scene_id = {},
                               std::string dataset = {});
ScenePtr parse_trajectory_text(std::string_view text, const TrajectoryFileSpec& spec, std::string scene_id = {},
                               std::string dataset = {});
ScenePtr load_trajectory_file(const std::filesystem::path& path, const TrajectoryFileSpec& spec);

/// Shortest round-trip decimal formatting, so parse(write(s)) reproduces the
/// coordinates bit for bit.
void write_trajectory_file(const Scene& scene, std::ostream& out,
                           ColumnOrder order = ColumnOrder::frame_agent_x_y);
std::string write_trajectory_text(const Scene& scene, ColumnOrder order = ColumnOrder::frame_agent_x_y);

/// Drops agents that never appear and trims fully empty leading and trailing
/// frames; two scenes that differ only by that renumbering canonicalize to the
/// same geometry.
ScenePtr canonicalize(const Scene& scene);

/// Loads every regular file in `dir` (sorted by name) or a single file.
std::vector<ScenePtr> load_scenes(const std::filesystem::path& path, const TrajectoryFileSpec& spec);

}  // namespace snce
