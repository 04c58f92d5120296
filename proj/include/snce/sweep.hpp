#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "snce/config.hpp"
#include "snce/metrics.hpp"

namespace snce {

/// One tunable RunConfig field. Recognized names: temperature,
/// contrastive_weight, horizon, rho_min, rho_max, noise_weight.
struct ParamSpec {
  enum class Kind { uniform, grid };

  std::string name;
  Kind kind = Kind::uniform;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> values;

  static ParamSpec uniform(std::string name, double lo, double hi);
  static ParamSpec grid(std::string name, std::vector<double> values);
  void validate() const;
};

struct SearchSpace {
  std::vector<ParamSpec> params;
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  /// Trial 0 evaluates the unmodified base config.
  bool include_base = true;

  void validate() const;
};

/// temperature U[0.1, 0.5], contrastive_weight U[0, 50], horizon grid {1..5}.
SearchSpace loss_search_space();
/// rho_min U[0.1, 0.5], rho_max U[2.2, 2.8], noise_weight U[0, 0.5].
SearchSpace augment_search_space();
/// "loss" or "augment".
SearchSpace search_space_preset(const std::string& name);

/// Sets a named field; throws for unknown names.
void apply_param(RunConfig& cfg, const std::string& name, double value);

/// Deterministic in (space.seed, trial). Grid parameters cycle through a
/// seeded permutation of their values, so any run of len(values) consecutive
/// non-base trials covers each value once.
RunConfig sample_config(const SearchSpace& space, const RunConfig& base, std::size_t trial);

/// Lexicographic (COL, then FDE) or weighted FDE + alpha * COL. Lower is better.
struct Objective {
  enum class Kind { lexicographic, weighted };
  Kind kind = Kind::lexicographic;
  double alpha = 0.0;

  /// "lexicographic" or "weighted:<alpha>".
  static Objective parse(const std::string& text);
  std::string to_string() const;
  std::array<double, 2> value(const EvalReport& report) const;
};

struct TrialRecord {
  std::size_t trial = 0;
  RunConfig config;
  bool ok = false;
  std::string error;
  EvalReport report;
  std::array<double, 2> objective{};
  double seconds = 0.0;
};

nlohmann::ordered_json to_json(const TrialRecord& record);

struct SweepResult {
  std::size_t best = 0;
  std::vector<TrialRecord> trials;

  const TrialRecord& best_trial() const { return trials.at(best); }
};

/// Trains and evaluates one config; the report feeds the objective.
using TrialRunner = std::function<EvalReport(const RunConfig& cfg, std::size_t trial)>;

/// Runner that trains on load_sample_sets(cfg) and reports the best
/// validation checkpoint.
TrialRunner training_runner();

/// Index of the minimal objective among successful trials, lowest trial
/// index on ties; nullopt when none succeeded.
std::optional<std::size_t> select_best(const std::vector<TrialRecord>& trials);

/// A failing trial is recorded and the sweep continues; throws if every
/// trial fails. When `log` is set each record is written as one JSON line.
SweepResult run_sweep(const SearchSpace& space, const RunConfig& base, const Objective& objective,
                      const TrialRunner& runner, std::ostream* log = nullptr);

}  // namespace snce
