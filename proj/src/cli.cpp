#include "snce/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "CLI11.hpp"

#include "snce/checkpoint.hpp"
#include "snce/config.hpp"
#include "snce/gradcheck.hpp"
#include "snce/sweep.hpp"
#include "snce/training.hpp"

namespace snce {

namespace {

namespace fs = std::filesystem;

/// Flags shared by the commands that build a RunConfig. Precedence: preset,
/// then --config file, then individual flags.
struct RunFlags {
  std::string preset = "default";
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<double> contrastive_weight;
  std::optional<double> temperature;
  std::optional<std::size_t> horizon;
  std::optional<std::string> denominator;
  std::optional<double> rho_min;
  std::optional<double> rho_max;
  std::optional<double> noise_weight;
  std::optional<std::size_t> n_scenes;
  std::optional<std::size_t> n_agents;
  std::optional<std::uint64_t> scenario_seed;
  std::vector<std::string> train_data;
  std::vector<std::string> val_data;
  std::optional<std::string> column_order;
  std::optional<std::size_t> subsample;
  std::optional<double> frame_interval;
  std::optional<std::size_t> obs_len;
  std::optional<std::size_t> pred_len;
  std::optional<std::size_t> batch_size;
  std::optional<double> learning_rate;
  std::optional<std::size_t> workers;
  std::optional<double> threshold;
  std::optional<std::string> collision_mode;
  bool no_wall_clock = false;
};

void add_run_flags(CLI::App* app, RunFlags& f, bool seed_required) {
  app->add_option("--preset", f.preset, "Base hyperparameters: default or tuned")->capture_default_str();
  app->add_option("--config", f.config_path, "JSON RunConfig merged over the preset")->check(CLI::ExistingFile);
  auto* seed = app->add_option("--seed", f.seed, "Master seed for initialization, shuffling and augmentation");
  if (seed_required) seed->required();
  app->add_option("--epochs", f.epochs, "Training epochs");
  app->add_option("--lambda", f.contrastive_weight, "Contrastive weight");
  app->add_option("--tau", f.temperature, "Temperature");
  app->add_option("--horizon", f.horizon, "Sampling horizon (offsets 1..H)");
  app->add_option("--denominator", f.denominator, "per_horizon or joint");
  app->add_option("--rho-min", f.rho_min, "Minimum negative separation (m)");
  app->add_option("--rho-max", f.rho_max, "Maximum negative separation (m)");
  app->add_option("--noise", f.noise_weight, "Negative-key noise standard deviation (m)");
  app->add_option("--n-scenes", f.n_scenes, "Synthetic scenes");
  app->add_option("--n-agents", f.n_agents, "Agents per synthetic scene");
  app->add_option("--scenario-seed", f.scenario_seed, "Synthetic data seed");
  app->add_option("--train-data", f.train_data, "Trajectory files or directories for training");
  app->add_option("--val-data", f.val_data, "Trajectory files or directories for validation");
  app->add_option("--column-order", f.column_order, "frame_agent_x_y or frame_agent_y_x");
  app->add_option("--subsample", f.subsample, "Keep every k-th frame of input files");
  app->add_option("--frame-interval", f.frame_interval, "Seconds between frames of input files");
  app->add_option("--obs-len", f.obs_len, "Observed steps");
  app->add_option("--pred-len", f.pred_len, "Predicted steps");
  app->add_option("--batch-size", f.batch_size, "Samples per optimizer step");
  app->add_option("--lr", f.learning_rate, "Adam learning rate");
  app->add_option("--workers", f.workers, "Threads per batch (results do not depend on it)");
  app->add_option("--threshold", f.threshold, "Collision threshold (m)");
  app->add_option("--collision-mode", f.collision_mode, "predicted_vs_truth or predicted_vs_predicted");
  app->add_flag("--no-wall-clock", f.no_wall_clock, "Log 0 seconds per epoch so logs are byte-reproducible");
}

template <typename T>
void set_if(const std::optional<T>& v, T& target) {
  if (v) target = *v;
}

RunConfig build_run_config(const RunFlags& f) {
  RunConfig c = preset_config(f.preset);
  if (!f.config_path.empty()) c = load_run_config(f.config_path, c);
  set_if(f.seed, c.seed);
  set_if(f.epochs, c.epochs);
  set_if(f.contrastive_weight, c.nce.contrastive_weight);
  set_if(f.temperature, c.nce.temperature);
  set_if(f.horizon, c.nce.horizon);
  if (f.denominator) c.nce.mode = denominator_mode_from_string(*f.denominator);
  set_if(f.rho_min, c.augment.rho_min);
  set_if(f.rho_max, c.augment.rho_max);
  set_if(f.noise_weight, c.augment.noise_weight);
  set_if(f.n_scenes, c.scenario.n_scenes);
  set_if(f.n_agents, c.scenario.n_agents);
  set_if(f.scenario_seed, c.scenario.seed);
  if (!f.train_data.empty()) c.data.train_paths = f.train_data;
  if (!f.val_data.empty()) c.data.val_paths = f.val_data;
  if (f.column_order) c.data.column_order = column_order_from_string(*f.column_order);
  set_if(f.subsample, c.data.subsample);
  set_if(f.frame_interval, c.data.frame_interval);
  set_if(f.obs_len, c.obs_len);
  set_if(f.pred_len, c.pred_len);
  set_if(f.batch_size, c.batch_size);
  set_if(f.learning_rate, c.optimizer.learning_rate);
  set_if(f.workers, c.workers);
  set_if(f.threshold, c.collision_threshold);
  if (f.collision_mode) c.collision_mode = collision_mode_from_string(*f.collision_mode);
  if (f.no_wall_clock) c.log_wall_clock = false;
  c.validate();
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

// simulate ------------------------------------------------------------------

struct SimulateFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_scenes;
  std::optional<std::size_t> n_agents;
  std::optional<std::size_t> steps;
  std::optional<double> validation_fraction;
  std::optional<std::uint64_t> split_seed;
  std::string column_order = "frame_agent_x_y";
  std::string out_dir;
};

int cmd_simulate(const SimulateFlags& f, std::ostream& out) {
  RunConfig run;
  if (!f.config_path.empty()) run = load_run_config(f.config_path);
  set_if(f.seed, run.scenario.seed);
  set_if(f.n_scenes, run.scenario.n_scenes);
  set_if(f.n_agents, run.scenario.n_agents);
  set_if(f.steps, run.scenario.steps);
  set_if(f.validation_fraction, run.split.validation_fraction);
  set_if(f.split_seed, run.split.split_seed);
  const ColumnOrder order = column_order_from_string(f.column_order);

  const auto split = generate_dataset(run.scenario, run.split);
  const fs::path root(f.out_dir);
  for (const auto& [name, scenes] : {std::pair{"train", &split.train}, std::pair{"val", &split.validation}}) {
    const fs::path dir = root / name;
    fs::create_directories(dir);
    for (const auto& scene : *scenes) {
      write_text(dir / (scene->id() + ".txt"), write_trajectory_text(*scene, order));
    }
  }
  nlohmann::ordered_json meta;
  meta["scenario"] = to_json(run)["scenario"];
  meta["split"] = to_json(run)["split"];
  meta["column_order"] = to_string(order);
  write_text(root / "scenario.json", meta.dump(2) + "\n");

  std::vector<ScenePtr> all(split.train);
  all.insert(all.end(), split.validation.begin(), split.validation.end());
  const auto stats = interaction_stats(all);
  char line[200];
  std::snprintf(line, sizeof line,
                "wrote %zu train + %zu val scenes to %s\nmin inter-agent distance: mean %.3f m, median %.3f m\n"
                "scenes with a near miss (< %.2f m): %.1f%%\n",
                split.train.size(), split.validation.size(), root.string().c_str(), stats.mean_min_distance,
                stats.median_min_distance, stats.near_miss_distance, 100.0 * stats.near_miss_fraction);
  out << line;
  return 0;
}

// train ---------------------------------------------------------------------

int cmd_train(const RunFlags& flags, const std::string& out_dir, bool quiet, std::ostream& out) {
  const RunConfig run = build_run_config(flags);
  const auto sets = load_sample_sets(run);
  if (sets.train.empty() || sets.validation.empty()) {
    throw std::runtime_error("no samples: the data yields " + std::to_string(sets.train.size()) + " training and " +
                             std::to_string(sets.validation.size()) + " validation windows of length " +
                             std::to_string(run.obs_len + run.pred_len));
  }
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  save_run_config(dir / "config.json", run);

  std::ofstream log(dir / "train_log.jsonl", std::ios::binary);
  if (!log) throw std::runtime_error("cannot write " + (dir / "train_log.jsonl").string());
  const auto on_epoch = [&](const EpochLog& e) {
    log << to_json(e).dump() << '\n' << std::flush;
    if (!quiet) {
      char line[200];
      std::snprintf(line, sizeof line, "epoch %4zu  task %.5f  nce %.5f  val FDE %.4f  val COL %.2f%%\n", e.epoch,
                    e.task_loss, e.nce_loss, e.val_fde, e.val_col);
      out << line << std::flush;
    }
  };
  const auto result = train(sets.train, sets.validation, run, on_epoch);
  save_checkpoint(dir / "checkpoint.json", {run, result.best});
  save_checkpoint(dir / "last_checkpoint.json", {run, result.last});
  nlohmann::ordered_json report;
  report["best_epoch"] = result.best_epoch;
  report["validation"] = to_json(result.best_report);
  write_text(dir / "report.json", report.dump(2) + "\n");

  out << "best epoch " << result.best_epoch << " of " << run.epochs << "\n" << render_table(result.best_report);
  return 0;
}

// eval ----------------------------------------------------------------------

struct EvalFlags {
  std::string checkpoint;
  std::vector<std::string> data;
  std::optional<std::size_t> obs_len;
  std::optional<std::size_t> pred_len;
  std::optional<std::string> column_order;
  std::optional<std::size_t> subsample;
  std::optional<double> frame_interval;
  std::optional<double> threshold;
  std::optional<std::string> collision_mode;
  std::string json_out;
};

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(f.checkpoint);
  RunConfig data_run = ckpt.run;
  set_if(f.obs_len, data_run.obs_len);
  set_if(f.pred_len, data_run.pred_len);
  if (data_run.pred_len != ckpt.run.pred_len) {
    throw std::invalid_argument("pred_len mismatch: checkpoint predicts " + std::to_string(ckpt.run.pred_len) +
                                " steps but the data windows use pred_len " + std::to_string(data_run.pred_len));
  }
  if (data_run.obs_len != ckpt.run.obs_len) {
    throw std::invalid_argument("obs_len mismatch: checkpoint observes " + std::to_string(ckpt.run.obs_len) +
                                " steps but the data windows use obs_len " + std::to_string(data_run.obs_len));
  }
  set_if(f.threshold, data_run.collision_threshold);
  if (f.collision_mode) data_run.collision_mode = collision_mode_from_string(*f.collision_mode);

  std::vector<Sample> samples;
  if (f.data.empty()) {
    samples = load_sample_sets(data_run).validation;
  } else {
    TrajectoryFileSpec spec;
    spec.order = f.column_order ? column_order_from_string(*f.column_order) : data_run.data.column_order;
    spec.subsample = f.subsample.value_or(data_run.data.subsample);
    spec.frame_interval = f.frame_interval.value_or(data_run.data.frame_interval);
    std::vector<ScenePtr> scenes;
    for (const auto& p : f.data) {
      auto s = load_scenes(p, spec);
      scenes.insert(scenes.end(), s.begin(), s.end());
    }
    samples = samples_from_scenes(scenes, data_run);
  }
  if (samples.empty()) {
    throw std::runtime_error("no evaluation windows of length " +
                             std::to_string(data_run.obs_len + data_run.pred_len) + " in the data");
  }
  const auto report = evaluate(ckpt.model, samples, data_run.eval_options());
  if (!f.json_out.empty()) write_text(f.json_out, to_json(report).dump(2) + "\n");
  out << render_table(report);
  return 0;
}

// sweep ---------------------------------------------------------------------

struct SweepFlags {
  std::string space = "loss";
  std::size_t trials = 20;
  std::uint64_t search_seed = 0;
  std::string objective = "lexicographic";
  std::string log_path;
  bool no_base = false;
};

int cmd_sweep(const RunFlags& run_flags, const SweepFlags& f, std::ostream& out) {
  const RunConfig base = build_run_config(run_flags);
  SearchSpace space = search_space_preset(f.space);
  space.trials = f.trials;
  space.seed = f.search_seed;
  space.include_base = !f.no_base;
  const Objective objective = Objective::parse(f.objective);

  std::ofstream log_file;
  std::ostream* log = nullptr;
  if (!f.log_path.empty()) {
    log_file.open(f.log_path, std::ios::binary);
    if (!log_file) throw std::runtime_error("cannot write " + f.log_path);
    log = &log_file;
  }
  const auto result = run_sweep(space, base, objective, training_runner(), log);
  char line[240];
  for (const auto& t : result.trials) {
    if (t.ok) {
      std::snprintf(line, sizeof line, "trial %3zu  tau %.4f  lambda %7.3f  horizon %zu  rho %.3f/%.3f  noise %.3f"
                                       "  FDE %.4f  COL %.2f%%\n",
                    t.trial, t.config.nce.temperature, t.config.nce.contrastive_weight, t.config.nce.horizon,
                    t.config.augment.rho_min, t.config.augment.rho_max, t.config.augment.noise_weight,
                    t.report.fde_mean, t.report.col_rate);
      out << line;
    } else {
      out << "trial " << t.trial << " failed: " << t.error << "\n";
    }
  }
  out << "best trial " << result.best_trial().trial << " (objective " << objective.to_string() << ")\n";
  return 0;
}

// gradcheck -----------------------------------------------------------------

int cmd_gradcheck(const GradCheckOptions& options, std::ostream& out) {
  const auto results = run_gradcheck_suites(options);
  char line[200];
  std::snprintf(line, sizeof line, "%-42s %14s %8s %8s\n", "suite", "max rel err", "probes", "kinks");
  out << line;
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-42s %14.3e %8zu %8zu  %s\n", r.name.c_str(), r.max_relative_error, r.checked,
                  r.skipped_kinks, r.passed ? "ok" : "FAIL");
    out << line;
  }
  const bool ok = all_passed(results);
  out << (ok ? "all gradient checks passed" : "gradient check FAILED") << " (tolerance " << options.tolerance
      << ")\n";
  return ok ? 0 : 1;
}

constexpr const char* kObjectiveHelp =
    "Selection objective. Default 'lexicographic' minimizes COL, then FDE; "
    "'weighted:<alpha>' minimizes FDE + alpha * COL";

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Social-NCE trajectory forecasting: simulate, train, evaluate, sweep, gradient checks", "snce"};
  app.require_subcommand(1);

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Generate circle-crossing scenes as trajectory files");
  simulate->add_option("--config", sim.config_path, "JSON RunConfig supplying scenario and split")
      ->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim.seed, "Scenario seed");
  simulate->add_option("--n-scenes", sim.n_scenes, "Number of scenes");
  simulate->add_option("--n-agents", sim.n_agents, "Agents per scene");
  simulate->add_option("--steps", sim.steps, "Frames per scene");
  simulate->add_option("--validation-fraction", sim.validation_fraction, "Share of scenes held out");
  simulate->add_option("--split-seed", sim.split_seed, "Seed of the train/validation shuffle");
  simulate->add_option("--column-order", sim.column_order, "frame_agent_x_y or frame_agent_y_x")
      ->capture_default_str();
  simulate->add_option("--out", sim.out_dir, "Output directory (train/ and val/ are created)")->required();

  RunFlags train_flags;
  std::string train_out;
  bool quiet = false;
  auto* train_cmd = app.add_subcommand("train", "Train a forecaster; writes checkpoint, log, config and report");
  add_run_flags(train_cmd, train_flags, true);
  train_cmd->add_option("--out", train_out, "Output directory")->required();
  train_cmd->add_flag("--quiet", quiet, "Do not print per-epoch progress");

  EvalFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint: FDE and COL per dataset");
  eval_cmd->add_option("--checkpoint", eval_flags.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--data", eval_flags.data,
                       "Trajectory files or directories (default: the checkpoint's validation data)");
  eval_cmd->add_option("--obs-len", eval_flags.obs_len, "Observed steps of the data windows");
  eval_cmd->add_option("--pred-len", eval_flags.pred_len, "Predicted steps of the data windows");
  eval_cmd->add_option("--column-order", eval_flags.column_order, "frame_agent_x_y or frame_agent_y_x");
  eval_cmd->add_option("--subsample", eval_flags.subsample, "Keep every k-th frame");
  eval_cmd->add_option("--frame-interval", eval_flags.frame_interval, "Seconds between frames");
  eval_cmd->add_option("--threshold", eval_flags.threshold, "Collision threshold (m)");
  eval_cmd->add_option("--collision-mode", eval_flags.collision_mode, "predicted_vs_truth or predicted_vs_predicted");
  eval_cmd->add_option("--json", eval_flags.json_out, "Also write the report as JSON");

  RunFlags sweep_run;
  SweepFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "Random/grid hyperparameter search; one JSON line per trial");
  add_run_flags(sweep, sweep_run, true);
  sweep->add_option("--space", sweep_flags.space, "Search space: loss or augment")->capture_default_str();
  sweep->add_option("--trials", sweep_flags.trials, "Trials, including the base config as trial 0")
      ->capture_default_str();
  sweep->add_option("--search-seed", sweep_flags.search_seed, "Seed of the sampled configs")->capture_default_str();
  sweep->add_option("--objective", sweep_flags.objective, kObjectiveHelp)->capture_default_str();
  sweep->add_option("--log", sweep_flags.log_path, "JSONL trial log");
  sweep->add_flag("--no-base", sweep_flags.no_base, "Do not spend trial 0 on the base config");

  GradCheckOptions gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference checks of every analytic gradient");
  gradcheck->add_option("--seed", gc.seed, "Seed of the probe model, scene and coordinates")->capture_default_str();
  gradcheck->add_option("--probes", gc.probes_per_network, "Probes per network")->capture_default_str();
  gradcheck->add_option("--tolerance", gc.tolerance, "Maximum relative error")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (train_cmd->parsed()) return cmd_train(train_flags, train_out, quiet, out);
    if (eval_cmd->parsed()) return cmd_eval(eval_flags, out);
    if (sweep->parsed()) return cmd_sweep(sweep_run, sweep_flags, out);
    if (gradcheck->parsed()) return cmd_gradcheck(gc, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace snce
