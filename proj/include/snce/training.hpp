#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "snce/config.hpp"
#include "snce/forecaster.hpp"
#include "snce/metrics.hpp"

namespace snce {

struct EpochLog {
  std::size_t epoch = 0;
  double task_loss = 0.0;
  double nce_loss = 0.0;
  double combined_loss = 0.0;
  double val_fde = 0.0;
  double val_col = 0.0;
  double seconds = 0.0;

  /// Equality over every field except the wall-clock `seconds`.
  bool same_metrics(const EpochLog& other) const;
};

struct TrainLog {
  std::vector<EpochLog> epochs;

  bool same_metrics(const TrainLog& other) const;
};

nlohmann::ordered_json to_json(const EpochLog& e);
/// One JSON object per line, keys: epoch, task_loss, nce_loss, combined_loss,
/// val_fde, val_col, seconds.
std::string to_jsonl(const TrainLog& log);

/// Raised when a loss or parameter turns non-finite during training.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  /// Parameters from the epoch with the lowest validation COL (FDE breaks ties).
  Model best;
  std::size_t best_epoch = 0;
  EvalReport best_report;
  Model last;
  TrainLog log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Adam on task + weight * Social-NCE for run.epochs epochs with seeded
/// shuffling and augmentation. Deterministic for a given RunConfig regardless
/// of run.workers.
TrainResult train(std::span<const Sample> train_set, std::span<const Sample> validation, const RunConfig& run,
                  const EpochCallback& on_epoch = {});

struct SampleSets {
  std::vector<Sample> train;
  std::vector<Sample> validation;
};

/// Windows every scene into samples using the run's obs/pred/stride.
std::vector<Sample> samples_from_scenes(std::span<const ScenePtr> scenes, const RunConfig& run);

/// Builds train/validation samples from the synthetic scenario or from the
/// configured trajectory files.
SampleSets load_sample_sets(const RunConfig& run);

}  // namespace snce
