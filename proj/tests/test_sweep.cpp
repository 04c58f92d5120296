#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "snce/sweep.hpp"

using namespace snce;

namespace {

/// Closed-form stand-in for training: COL grows with |tau - 0.3|, FDE with the weight.
EvalReport stub_report(const RunConfig& cfg) {
  EvalReport r;
  r.col_rate = std::round(100.0 * std::abs(cfg.nce.temperature - 0.3));
  r.fde_mean = 0.3 + 0.001 * cfg.nce.contrastive_weight + 0.01 * static_cast<double>(cfg.nce.horizon);
  r.n_cases = 1;
  return r;
}

const TrialRunner kStub = [](const RunConfig& cfg, std::size_t) { return stub_report(cfg); };

}  // namespace

TEST_CASE("sampling is reproducible and seed dependent") {
  SearchSpace space = loss_search_space();
  space.seed = 7;
  for (std::size_t t = 0; t < 10; ++t) CHECK(sample_config(space, {}, t) == sample_config(space, {}, t));
  CHECK(sample_config(space, {}, 0) == RunConfig{});
  SearchSpace other = space;
  other.seed = 8;
  CHECK_FALSE(sample_config(space, {}, 3) == sample_config(other, {}, 3));
}

TEST_CASE("grid values are each covered once per cycle") {
  SearchSpace space = loss_search_space();
  space.include_base = false;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    space.seed = seed;
    for (std::size_t cycle = 0; cycle < 3; ++cycle) {
      std::multiset<std::size_t> seen;
      for (std::size_t t = 5 * cycle; t < 5 * cycle + 5; ++t) seen.insert(sample_config(space, {}, t).nce.horizon);
      CHECK(seen == std::multiset<std::size_t>{1, 2, 3, 4, 5});
    }
  }
}

TEST_CASE("property: uniform draws stay inside their ranges") {
  SearchSpace loss = loss_search_space();
  SearchSpace aug = augment_search_space();
  double t_lo = 1.0;
  double t_hi = 0.0;
  for (std::size_t t = 1; t <= 10000; ++t) {
    const auto c = sample_config(loss, {}, t);
    CHECK((c.nce.temperature >= 0.1 && c.nce.temperature <= 0.5));
    CHECK((c.nce.contrastive_weight >= 0.0 && c.nce.contrastive_weight <= 50.0));
    t_lo = std::min(t_lo, c.nce.temperature);
    t_hi = std::max(t_hi, c.nce.temperature);
    const auto a = sample_config(aug, {}, t);
    CHECK((a.augment.rho_min >= 0.1 && a.augment.rho_min <= 0.5));
    CHECK((a.augment.rho_max >= 2.2 && a.augment.rho_max <= 2.8));
    CHECK((a.augment.noise_weight >= 0.0 && a.augment.noise_weight <= 0.5));
  }
  CHECK(t_lo < 0.11);
  CHECK(t_hi > 0.49);
}

TEST_CASE("a single trial is the best") {
  SearchSpace space = loss_search_space();
  space.trials = 1;
  const auto r = run_sweep(space, {}, {}, kStub);
  CHECK(r.trials.size() == 1);
  CHECK(r.best == 0);
}

TEST_CASE("sweep picks the argmin of the stub objective") {
  for (const std::string text : {"lexicographic", "weighted:0.5"}) {
    const auto objective = Objective::parse(text);
    SearchSpace space = loss_search_space();
    space.trials = 30;
    space.seed = 3;
    const auto r = run_sweep(space, {}, objective, kStub);
    std::size_t expected = 0;
    for (std::size_t t = 1; t < space.trials; ++t) {
      const auto a = objective.value(stub_report(sample_config(space, {}, t)));
      const auto b = objective.value(stub_report(sample_config(space, {}, expected)));
      if (a < b) expected = t;
    }
    CHECK(r.best == expected);
    for (const auto& t : r.trials) CHECK(t.objective == objective.value(stub_report(t.config)));
  }
}

TEST_CASE("selection ignores record order and breaks ties by trial index") {
  SearchSpace space = loss_search_space();
  space.trials = 12;
  auto trials = run_sweep(space, {}, {}, kStub).trials;
  const auto forward = trials[*select_best(trials)].trial;
  std::reverse(trials.begin(), trials.end());
  CHECK(trials[*select_best(trials)].trial == forward);

  std::vector<TrialRecord> tied(3);
  for (std::size_t i = 0; i < 3; ++i) {
    tied[i].trial = 2 - i;
    tied[i].ok = true;
    tied[i].objective = {1.0, 2.0};
  }
  CHECK(tied[*select_best(tied)].trial == 0);
}

TEST_CASE("failed trials are recorded and skipped") {
  SearchSpace space = loss_search_space();
  space.trials = 6;
  const TrialRunner flaky = [](const RunConfig& cfg, std::size_t t) {
    if (t % 2 == 0) throw std::runtime_error("diverged");
    return stub_report(cfg);
  };
  std::ostringstream log;
  const auto r = run_sweep(space, {}, {}, flaky, &log);
  CHECK(r.best % 2 == 1);
  CHECK_FALSE(r.trials[0].ok);
  CHECK(r.trials[0].error == "diverged");
  std::istringstream lines(log.str());
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line); ++n) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["trial"] == n);
    CHECK(j["status"] == (n % 2 == 0 ? "failed" : "ok"));
  }
  CHECK(n == 6);

  const TrialRunner broken = [](const RunConfig&, std::size_t) -> EvalReport { throw std::runtime_error("no"); };
  CHECK_THROWS_AS(run_sweep(space, {}, {}, broken), std::runtime_error);
}

TEST_CASE("objective parsing") {
  CHECK(Objective::parse("lexicographic").kind == Objective::Kind::lexicographic);
  const auto w = Objective::parse("weighted:2.5");
  CHECK(w.alpha == 2.5);
  EvalReport r;
  r.col_rate = 4.0;
  r.fde_mean = 0.5;
  CHECK(w.value(r)[0] == 10.5);
  CHECK(Objective{}.value(r) == std::array<double, 2>{4.0, 0.5});
  CHECK(Objective::parse(w.to_string()).alpha == 2.5);
  CHECK_THROWS(Objective::parse("weighted:"));
  CHECK_THROWS(Objective::parse("weighted:-1"));
  CHECK_THROWS(Objective::parse("best"));
}

TEST_CASE("parameter application and space validation") {
  RunConfig c;
  apply_param(c, "horizon", 3.0);
  CHECK(c.nce.horizon == 3);
  apply_param(c, "rho_max", 2.5);
  CHECK(c.augment.rho_max == 2.5);
  CHECK_THROWS(apply_param(c, "learning_rate", 1.0));
  CHECK_THROWS(search_space_preset("optimizer"));
  CHECK_THROWS(ParamSpec::uniform("temperature", 0.5, 0.1).validate());
  CHECK_THROWS(ParamSpec::grid("horizon", {}).validate());
}

TEST_CASE("training runner on a tiny config") {
  RunConfig cfg;
  cfg.scenario.n_scenes = 6;
  cfg.scenario.steps = 10;
  cfg.obs_len = 4;
  cfg.pred_len = 4;
  cfg.nce.horizon = 4;
  cfg.hidden_width = 8;
  cfg.epochs = 1;
  const auto report = training_runner()(cfg, 0);
  CHECK(report.n_cases > 0);
  CHECK(std::isfinite(report.fde_mean));
}
