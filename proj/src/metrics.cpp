#include "snce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace snce {

double fde(const Trajectory& predicted, const Trajectory& truth) {
  if (predicted.empty() || predicted.size() != truth.size()) {
    throw std::invalid_argument("FDE needs equal non-empty trajectories, got " + std::to_string(predicted.size()) +
                                " and " + std::to_string(truth.size()));
  }
  return distance(predicted.back(), truth.back());
}

bool collides(const CollisionCase& c, double threshold) {
  for (const auto& nb : c.neighbors) {
    if (nb.size() != c.primary.size()) throw std::invalid_argument("collision case steps are not time-aligned");
    for (std::size_t k = 0; k < nb.size(); ++k) {
      if (nb[k] && distance(c.primary[k], *nb[k]) < threshold) return true;
    }
  }
  return false;
}

double collision_rate(std::span<const CollisionCase> cases, double threshold) {
  if (cases.empty()) throw std::invalid_argument("collision rate over zero cases is undefined");
  std::size_t hits = 0;
  for (const auto& c : cases) hits += collides(c, threshold) ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(cases.size());
}

std::string to_string(CollisionMode mode) {
  return mode == CollisionMode::predicted_vs_predicted ? "predicted_vs_predicted" : "predicted_vs_truth";
}

CollisionMode collision_mode_from_string(const std::string& name) {
  if (name == "predicted_vs_truth") return CollisionMode::predicted_vs_truth;
  if (name == "predicted_vs_predicted") return CollisionMode::predicted_vs_predicted;
  throw std::invalid_argument("unknown collision mode '" + name +
                              "' (expected predicted_vs_truth or predicted_vs_predicted)");
}

namespace {

CollisionCase make_case(const Sample& s, Trajectory primary, const Predictor& predictor, CollisionMode mode) {
  CollisionCase c;
  c.primary = std::move(primary);
  const auto& scene = *s.scene;
  const std::size_t window_end = s.start_frame + s.obs_len + s.pred_len;
  for (std::size_t a = 0; a < scene.num_agents(); ++a) {
    if (a == s.primary) continue;
    std::vector<std::optional<AgentState>> path(s.pred_len);
    for (std::size_t k = 0; k < s.pred_len; ++k) path[k] = scene.at(s.current_frame() + 1 + k, a);
    if (mode == CollisionMode::predicted_vs_predicted) {
      const auto [first, last] = scene.presence(a);
      if (first <= s.start_frame && window_end <= last) {
        const auto predicted = predictor(Sample{s.scene, a, s.obs_len, s.pred_len, s.start_frame});
        for (std::size_t k = 0; k < s.pred_len; ++k) path[k] = predicted[k];
      }
    }
    c.neighbors.push_back(std::move(path));
  }
  return c;
}

}  // namespace

EvalReport evaluate(const Predictor& predictor, std::span<const Sample> samples, const EvalOptions& options) {
  if (!(options.threshold >= 0.0)) throw std::invalid_argument("collision threshold must be >= 0");
  if (samples.empty()) throw std::invalid_argument("cannot evaluate on zero samples");

  struct Accumulator {
    double fde_sum = 0.0;
    std::size_t hits = 0;
    std::size_t n = 0;
  };
  Accumulator total;
  std::map<std::string, Accumulator> per_dataset;
  for (const auto& s : samples) {
    auto predicted = predictor(s);
    const double err = fde(predicted, s.future());
    const bool hit = collides(make_case(s, std::move(predicted), predictor, options.mode), options.threshold);
    for (auto* acc : {&total, &per_dataset[s.scene->dataset()]}) {
      acc->fde_sum += err;
      acc->hits += hit ? 1 : 0;
      acc->n += 1;
    }
  }

  auto finish = [](const Accumulator& a, double& fde_mean, double& col) {
    fde_mean = a.fde_sum / static_cast<double>(a.n);
    col = 100.0 * static_cast<double>(a.hits) / static_cast<double>(a.n);
  };
  EvalReport report;
  report.n_cases = total.n;
  report.threshold = options.threshold;
  report.mode = options.mode;
  finish(total, report.fde_mean, report.col_rate);
  for (const auto& [name, acc] : per_dataset) {
    DatasetBreakdown b;
    b.dataset = name;
    b.n_cases = acc.n;
    finish(acc, b.fde_mean, b.col_rate);
    report.per_dataset.push_back(b);
  }
  return report;
}

EvalReport evaluate(const Model& model, std::span<const Sample> samples, const EvalOptions& options) {
  return evaluate([&model](const Sample& s) { return predict(model, s); }, samples, options);
}

double ground_truth_collision_rate(std::span<const Sample> samples, double threshold) {
  std::vector<CollisionCase> cases;
  cases.reserve(samples.size());
  const Predictor truth = [](const Sample& s) { return s.future(); };
  for (const auto& s : samples) cases.push_back(make_case(s, s.future(), truth, CollisionMode::predicted_vs_truth));
  return collision_rate(cases, threshold);
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& b : report.per_dataset) {
    per.push_back({{"dataset", b.dataset}, {"fde", b.fde_mean}, {"col", b.col_rate}, {"n_cases", b.n_cases}});
  }
  return {{"fde", report.fde_mean},
          {"col", report.col_rate},
          {"n_cases", report.n_cases},
          {"collision_threshold", report.threshold},
          {"collision_mode", to_string(report.mode)},
          {"per_dataset", per}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.fde_mean = j.at("fde").get<double>();
  r.col_rate = j.at("col").get<double>();
  r.n_cases = j.at("n_cases").get<std::size_t>();
  r.threshold = j.at("collision_threshold").get<double>();
  r.mode = collision_mode_from_string(j.at("collision_mode").get<std::string>());
  for (const auto& b : j.at("per_dataset")) {
    r.per_dataset.push_back({b.at("dataset").get<std::string>(), b.at("fde").get<double>(), b.at("col").get<double>(),
                             b.at("n_cases").get<std::size_t>()});
  }
  return r;
}

std::string render_table(const EvalReport& report) {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof line, "# COL: collision threshold %.3f m, %s\n", report.threshold,
                to_string(report.mode).c_str());
  out += line;
  std::snprintf(line, sizeof line, "%-16s %10s %10s %8s\n", "Dataset", "FDE", "COL", "Cases");
  out += line;
  for (const auto& b : report.per_dataset) {
    const std::string name = b.dataset.empty() ? "(unnamed)" : b.dataset;
    std::snprintf(line, sizeof line, "%-16s %10.3f %10.2f %8zu\n", name.c_str(), b.fde_mean, b.col_rate, b.n_cases);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-16s %10.3f %10.2f %8zu\n", "Average", report.fde_mean, report.col_rate,
                report.n_cases);
  out += line;
  return out;
}

}  // namespace snce
