#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "snce/augmentation.hpp"
#include "snce/dataset_io.hpp"
#include "snce/forecaster.hpp"
#include "snce/metrics.hpp"
#include "snce/nce_loss.hpp"
#include "snce/neural.hpp"
#include "snce/simulator.hpp"

namespace snce {

/// Trajectory files to train/evaluate on. Empty train_paths selects the
/// synthetic circle-crossing data described by RunConfig::scenario.
struct DataConfig {
  std::vector<std::string> train_paths;
  std::vector<std::string> val_paths;
  ColumnOrder column_order = ColumnOrder::frame_agent_x_y;
  double frame_interval = 0.4;
  std::size_t subsample = 1;

  bool synthetic() const { return train_paths.empty(); }
  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct RunConfig {
  NceConfig nce;
  AugmentConfig augment;
  ScenarioConfig scenario;
  SplitSpec split;
  DataConfig data;

  std::size_t obs_len = 8;
  std::size_t pred_len = 12;
  std::size_t stride = 1;
  std::size_t hidden_width = 64;

  AdamConfig optimizer;
  std::size_t batch_size = 32;
  std::size_t epochs = 300;

  double collision_threshold = 0.2;
  CollisionMode collision_mode = CollisionMode::predicted_vs_truth;

  std::uint64_t seed = 0;
  /// Threads evaluating per-sample gradients within a batch. Results do not
  /// depend on this value.
  std::size_t workers = 1;
  /// When false, per-epoch wall-clock seconds are logged as 0 so that logs of
  /// identical runs are byte-identical.
  bool log_wall_clock = true;

  void validate() const;
  ModelShape model_shape() const { return {obs_len, pred_len, hidden_width}; }
  EvalOptions eval_options() const { return {collision_threshold, collision_mode}; }
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json to_json(const RunConfig& cfg);

/// Fields present in `j` override `base`; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j, const RunConfig& base = {});

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base = {});
void save_run_config(const std::filesystem::path& path, const RunConfig& cfg);

/// "default": the stock loss and augmentation hyperparameters.
/// "tuned": tau 0.1412, horizon 1, weight 16, separation 0.22 / 3.1, noise 0.24.
RunConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace snce
