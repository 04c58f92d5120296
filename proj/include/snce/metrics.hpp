#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "snce/forecaster.hpp"
#include "snce/scene.hpp"

namespace snce {

/// Euclidean error at the last step.
double fde(const Trajectory& predicted, const Trajectory& truth);

/// One evaluation case: the predicted primary path and, per neighbor, its
/// positions over the same steps (absent steps are skipped).
struct CollisionCase {
  Trajectory primary;
  std::vector<std::vector<std::optional<AgentState>>> neighbors;
};

/// True if any step puts the primary strictly closer than `threshold` to a
/// present neighbor.
bool collides(const CollisionCase& c, double threshold);

/// Percentage of colliding cases. Throws on an empty case list.
double collision_rate(std::span<const CollisionCase> cases, double threshold);

/// Whose future the primary prediction is checked against.
enum class CollisionMode { predicted_vs_truth, predicted_vs_predicted };

std::string to_string(CollisionMode mode);
CollisionMode collision_mode_from_string(const std::string& name);

struct EvalOptions {
  double threshold = 0.2;
  CollisionMode mode = CollisionMode::predicted_vs_truth;
};

struct DatasetBreakdown {
  std::string dataset;
  double fde_mean = 0.0;
  double col_rate = 0.0;
  std::size_t n_cases = 0;
};

struct EvalReport {
  double fde_mean = 0.0;
  /// Percent in [0, 100].
  double col_rate = 0.0;
  std::size_t n_cases = 0;
  double threshold = 0.2;
  CollisionMode mode = CollisionMode::predicted_vs_truth;
  std::vector<DatasetBreakdown> per_dataset;
};

using Predictor = std::function<Trajectory(const Sample&)>;

EvalReport evaluate(const Predictor& predictor, std::span<const Sample> samples, const EvalOptions& options);
EvalReport evaluate(const Model& model, std::span<const Sample> samples, const EvalOptions& options);

/// COL of the recorded futures themselves: each case's primary path is its
/// ground truth.
double ground_truth_collision_rate(std::span<const Sample> samples, double threshold);

nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

/// Plain-text table: one row per dataset plus an average row, FDE and COL
/// columns.
std::string render_table(const EvalReport& report);

}  // namespace snce
