#include "snce/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "snce/random.hpp"

namespace snce {

namespace {

constexpr std::uint64_t kInitStream = 0x1417ULL;
constexpr std::uint64_t kShuffleStream = 0x5f11ULL;
constexpr std::uint64_t kAugmentStream = 0xa09ULL;

bool better(const EvalReport& candidate, const EvalReport& incumbent) {
  if (candidate.col_rate != incumbent.col_rate) return candidate.col_rate < incumbent.col_rate;
  return candidate.fde_mean < incumbent.fde_mean;
}

}  // namespace

bool EpochLog::same_metrics(const EpochLog& o) const {
  return epoch == o.epoch && task_loss == o.task_loss && nce_loss == o.nce_loss && combined_loss == o.combined_loss &&
         val_fde == o.val_fde && val_col == o.val_col;
}

bool TrainLog::same_metrics(const TrainLog& other) const {
  if (epochs.size() != other.epochs.size()) return false;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (!epochs[i].same_metrics(other.epochs[i])) return false;
  }
  return true;
}

nlohmann::ordered_json to_json(const EpochLog& e) {
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["task_loss"] = e.task_loss;
  j["nce_loss"] = e.nce_loss;
  j["combined_loss"] = e.combined_loss;
  j["val_fde"] = e.val_fde;
  j["val_col"] = e.val_col;
  j["seconds"] = e.seconds;
  return j;
}

std::string to_jsonl(const TrainLog& log) {
  std::string out;
  for (const auto& e : log.epochs) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

TrainResult train(std::span<const Sample> train_set, std::span<const Sample> validation, const RunConfig& run,
                  const EpochCallback& on_epoch) {
  run.validate();
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  if (validation.empty()) throw std::invalid_argument("validation set is empty");
  for (const auto& s : train_set) {
    if (s.obs_len != run.obs_len || s.pred_len != run.pred_len) {
      throw std::invalid_argument("training sample window (" + std::to_string(s.obs_len) + ", " +
                                  std::to_string(s.pred_len) + ") does not match the run (" +
                                  std::to_string(run.obs_len) + ", " + std::to_string(run.pred_len) + ")");
    }
  }

  Rng init_rng = make_rng(run.seed, {kInitStream});
  Model model = Model::random(run.model_shape(), init_rng);
  std::vector<AdamState> adam;
  for (const auto* net : model.networks()) adam.push_back(AdamState::for_net(*net, run.optimizer));

  TrainResult result;
  bool have_best = false;
  std::vector<std::size_t> order(train_set.size());
  std::vector<LossValue> values;

  for (std::size_t epoch = 1; epoch <= run.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = make_rng(run.seed, {kShuffleStream, epoch});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double task_sum = 0.0;
    double nce_sum = 0.0;
    double combined_sum = 0.0;
    std::size_t step = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += run.batch_size, ++step) {
      const std::size_t end = std::min(order.size(), begin + run.batch_size);
      values.assign(end - begin, LossValue{});
      auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t p = begin + first; p < end; p += stride) {
          Rng rng = make_rng(run.seed, {kAugmentStream, run.augment.rng_seed, epoch, p});
          values[p - begin] = combined_loss(train_set[order[p]], model, run.nce, run.augment, rng);
        }
      };
      const std::size_t workers = std::min(run.workers, end - begin);
      if (workers <= 1) {
        work(0, 1);
      } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
      }

      ModelGrad grad = ModelGrad::zeros_like(model);
      for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& v = values[i];
        if (!std::isfinite(v.combined)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", step " << step << ", sample "
              << order[begin + i] << " (task " << v.task << ", nce " << v.nce << ")";
          throw TrainingError(msg.str());
        }
        task_sum += v.task;
        nce_sum += v.nce;
        combined_sum += v.combined;
        grad.add(v.grad);
      }
      grad.scale(1.0 / static_cast<double>(values.size()));

      auto nets = model.networks();
      auto parts = grad.parts();
      for (std::size_t k = 0; k < nets.size(); ++k) adam_step(*nets[k], *parts[k], adam[k], kNetworkNames[k]);
      if (!model.all_finite()) {
        throw TrainingError("non-finite parameters after epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(step));
      }
    }

    const auto report = evaluate(model, validation, run.eval_options());
    EpochLog row;
    row.epoch = epoch;
    const double n = static_cast<double>(train_set.size());
    row.task_loss = task_sum / n;
    row.nce_loss = nce_sum / n;
    row.combined_loss = combined_sum / n;
    row.val_fde = report.fde_mean;
    row.val_col = report.col_rate;
    if (run.log_wall_clock) {
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    result.log.epochs.push_back(row);
    if (!have_best || better(report, result.best_report)) {
      have_best = true;
      result.best = model;
      result.best_epoch = epoch;
      result.best_report = report;
    }
    if (on_epoch) on_epoch(row);
  }
  if (!have_best) {
    // Zero epochs: the initial parameters are both best and last.
    result.best = model;
    result.best_report = evaluate(model, validation, run.eval_options());
  }
  result.last = std::move(model);
  return result;
}

std::vector<Sample> samples_from_scenes(std::span<const ScenePtr> scenes, const RunConfig& run) {
  std::vector<Sample> out;
  for (const auto& scene : scenes) {
    auto s = slice_samples(scene, run.obs_len, run.pred_len, run.stride);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

SampleSets load_sample_sets(const RunConfig& run) {
  run.validate();
  std::vector<ScenePtr> train_scenes;
  std::vector<ScenePtr> val_scenes;
  if (run.data.synthetic()) {
    auto split = generate_dataset(run.scenario, run.split);
    train_scenes = std::move(split.train);
    val_scenes = std::move(split.validation);
  } else {
    TrajectoryFileSpec spec;
    spec.order = run.data.column_order;
    spec.frame_interval = run.data.frame_interval;
    spec.subsample = run.data.subsample;
    for (const auto& p : run.data.train_paths) {
      auto s = load_scenes(p, spec);
      train_scenes.insert(train_scenes.end(), s.begin(), s.end());
    }
    for (const auto& p : run.data.val_paths) {
      auto s = load_scenes(p, spec);
      val_scenes.insert(val_scenes.end(), s.begin(), s.end());
    }
  }
  return {samples_from_scenes(train_scenes, run), samples_from_scenes(val_scenes, run)};
}

}  // namespace snce
