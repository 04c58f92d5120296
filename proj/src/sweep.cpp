#include "snce/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include "snce/random.hpp"
#include "snce/training.hpp"

namespace snce {

namespace {

constexpr std::uint64_t kSweepStream = 0x5eeULL;

std::uint64_t name_hash(const std::string& name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

ParamSpec ParamSpec::uniform(std::string name, double lo, double hi) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = Kind::uniform;
  p.lo = lo;
  p.hi = hi;
  return p;
}

ParamSpec ParamSpec::grid(std::string name, std::vector<double> values) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = Kind::grid;
  p.values = std::move(values);
  return p;
}

void ParamSpec::validate() const {
  RunConfig probe;
  if (kind == Kind::uniform) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
      throw std::invalid_argument("search parameter " + name + ": uniform range needs lo < hi");
    }
    apply_param(probe, name, lo);
  } else {
    if (values.empty()) throw std::invalid_argument("search parameter " + name + ": grid is empty");
    if (std::set<double>(values.begin(), values.end()).size() != values.size()) {
      throw std::invalid_argument("search parameter " + name + ": grid values must be distinct");
    }
    apply_param(probe, name, values.front());
  }
}

void SearchSpace::validate() const {
  if (trials < 1) throw std::invalid_argument("a sweep needs at least one trial");
  std::set<std::string> seen;
  for (const auto& p : params) {
    p.validate();
    if (!seen.insert(p.name).second) throw std::invalid_argument("search parameter " + p.name + " listed twice");
  }
}

SearchSpace loss_search_space() {
  SearchSpace s;
  s.params = {ParamSpec::uniform("temperature", 0.1, 0.5), ParamSpec::uniform("contrastive_weight", 0.0, 50.0),
              ParamSpec::grid("horizon", {1, 2, 3, 4, 5})};
  return s;
}

SearchSpace augment_search_space() {
  SearchSpace s;
  s.params = {ParamSpec::uniform("rho_min", 0.1, 0.5), ParamSpec::uniform("rho_max", 2.2, 2.8),
              ParamSpec::uniform("noise_weight", 0.0, 0.5)};
  return s;
}

SearchSpace search_space_preset(const std::string& name) {
  if (name == "loss") return loss_search_space();
  if (name == "augment") return augment_search_space();
  throw std::invalid_argument("unknown search space '" + name + "' (expected loss or augment)");
}

void apply_param(RunConfig& cfg, const std::string& name, double value) {
  if (name == "temperature") {
    cfg.nce.temperature = value;
  } else if (name == "contrastive_weight") {
    cfg.nce.contrastive_weight = value;
  } else if (name == "horizon") {
    if (!(value >= 1.0) || value != std::floor(value)) {
      throw std::invalid_argument("horizon must be a positive integer, got " + std::to_string(value));
    }
    cfg.nce.horizon = static_cast<std::size_t>(value);
  } else if (name == "rho_min") {
    cfg.augment.rho_min = value;
  } else if (name == "rho_max") {
    cfg.augment.rho_max = value;
  } else if (name == "noise_weight") {
    cfg.augment.noise_weight = value;
  } else {
    throw std::invalid_argument("unknown search parameter '" + name + "'");
  }
}

RunConfig sample_config(const SearchSpace& space, const RunConfig& base, std::size_t trial) {
  RunConfig cfg = base;
  if (space.include_base && trial == 0) return cfg;
  const std::size_t draw = space.include_base ? trial - 1 : trial;
  for (const auto& p : space.params) {
    const std::uint64_t tag = name_hash(p.name);
    if (p.kind == ParamSpec::Kind::uniform) {
      Rng rng = make_rng(space.seed, {kSweepStream, tag, draw});
      apply_param(cfg, p.name, std::uniform_real_distribution<double>(p.lo, p.hi)(rng));
    } else {
      const std::size_t n = p.values.size();
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      Rng rng = make_rng(space.seed, {kSweepStream, tag, draw / n, 1});
      std::shuffle(perm.begin(), perm.end(), rng);
      apply_param(cfg, p.name, p.values[perm[draw % n]]);
    }
  }
  return cfg;
}

Objective Objective::parse(const std::string& text) {
  if (text == "lexicographic") return {};
  const std::string prefix = "weighted:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string rest = text.substr(prefix.size());
    std::size_t used = 0;
    double alpha = 0.0;
    try {
      alpha = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != rest.size() || !std::isfinite(alpha) || alpha < 0.0) {
      throw std::invalid_argument("objective weight '" + rest + "' is not a non-negative number");
    }
    return {Kind::weighted, alpha};
  }
  throw std::invalid_argument("unknown objective '" + text + "' (expected lexicographic or weighted:<alpha>)");
}

std::string Objective::to_string() const {
  return kind == Kind::lexicographic ? "lexicographic" : "weighted:" + std::to_string(alpha);
}

std::array<double, 2> Objective::value(const EvalReport& report) const {
  if (kind == Kind::lexicographic) return {report.col_rate, report.fde_mean};
  return {report.fde_mean + alpha * report.col_rate, 0.0};
}

nlohmann::ordered_json to_json(const TrialRecord& r) {
  nlohmann::ordered_json j;
  j["trial"] = r.trial;
  j["status"] = r.ok ? "ok" : "failed";
  if (!r.ok) j["error"] = r.error;
  j["config"] = to_json(r.config);
  if (r.ok) {
    j["report"] = to_json(r.report);
    j["objective"] = r.objective;
  }
  j["seconds"] = r.seconds;
  return j;
}

TrialRunner training_runner() {
  return [](const RunConfig& cfg, std::size_t) {
    const auto sets = load_sample_sets(cfg);
    return train(sets.train, sets.validation, cfg).best_report;
  };
}

std::optional<std::size_t> select_best(const std::vector<TrialRecord>& trials) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (!trials[i].ok) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& a = trials[i];
    const auto& b = trials[*best];
    if (a.objective < b.objective || (a.objective == b.objective && a.trial < b.trial)) best = i;
  }
  return best;
}

SweepResult run_sweep(const SearchSpace& space, const RunConfig& base, const Objective& objective,
                      const TrialRunner& runner, std::ostream* log) {
  space.validate();
  SweepResult result;
  for (std::size_t t = 0; t < space.trials; ++t) {
    TrialRecord rec;
    rec.trial = t;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      rec.config = sample_config(space, base, t);
      rec.config.validate();
      rec.report = runner(rec.config, t);
      rec.objective = objective.value(rec.report);
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (log) *log << to_json(rec).dump() << '\n' << std::flush;
    result.trials.push_back(std::move(rec));
  }
  const auto best = select_best(result.trials);
  if (!best) throw std::runtime_error("all " + std::to_string(space.trials) + " sweep trials failed");
  result.best = *best;
  return result;
}

}  // namespace snce
