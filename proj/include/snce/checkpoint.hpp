#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "snce/config.hpp"
#include "snce/forecaster.hpp"

namespace snce {

inline constexpr const char* kCheckpointFormat = "snce-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig run;
  Model model;
};

nlohmann::ordered_json to_json(const Checkpoint& ckpt);
/// Rebuilds and validates a checkpoint; layer shapes must match the stored run.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace snce
