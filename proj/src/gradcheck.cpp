#include "snce/gradcheck.hpp"

#include <algorithm>
#include <stdexcept>

#include "snce/random.hpp"

namespace snce {

namespace {

bool has_neighbors_throughout(const Sample& s, std::size_t horizon) {
  for (std::size_t dt = 0; dt <= horizon; ++dt) {
    if (neighbors_at(s, static_cast<std::ptrdiff_t>(dt)).empty()) return false;
  }
  return true;
}

std::vector<SuiteResult> check_model_graph(const GradCheckOptions& options, const NceConfig& eval_cfg,
                                           const NceConfig& analytic_cfg, const LossOptions& loss_options,
                                           const std::string& prefix) {
  const Sample sample = grad_check_sample(options, eval_cfg.horizon);
  Rng rng = make_rng(options.seed, {0x9cULL, 1});
  Model model = Model::random(options.shape, rng);
  Rng key_rng = make_rng(options.seed, {0x9cULL, 2});
  const auto bundles = build_key_bundles(sample, eval_cfg.horizon, AugmentConfig{}, key_rng);

  const auto analytic = combined_loss(sample, model, bundles, analytic_cfg, loss_options);
  const auto eval = [&] { return combined_loss(sample, model, bundles, eval_cfg, loss_options).combined; };

  std::vector<SuiteResult> out;
  auto nets = model.networks();
  const auto grads = analytic.grad.parts();
  for (std::size_t k = 0; k < nets.size(); ++k) {
    FiniteDifferenceOptions fd;
    fd.step = options.step;
    fd.tolerance = options.tolerance;
    fd.probes = options.probes_per_network;
    fd.seed = derive_seed(options.seed, {0x9cULL, 3, k});
    const auto params = nets[k]->parameter_pointers();
    const auto flat = grads[k]->flatten();
    const auto r = finite_difference_check(params, flat, eval, fd);
    out.push_back({prefix + "/" + kNetworkNames[k], r.max_relative_error, r.checked, r.skipped_kinks, r.passed});
  }
  return out;
}

}  // namespace

Sample grad_check_sample(const GradCheckOptions& options, std::size_t horizon) {
  ScenarioConfig scenario = options.scenario;
  scenario.seed = options.seed;
  for (std::size_t scene_index = 0; scene_index < 64; ++scene_index) {
    const auto scene = generate_scene(scenario, scene_index);
    const auto samples = slice_samples(scene, options.shape.obs_len, options.shape.pred_len, 1);
    if (samples.empty()) continue;
    Rng rng = make_rng(options.seed, {0x9cULL, 0, scene_index});
    const std::size_t offset = std::uniform_int_distribution<std::size_t>(0, samples.size() - 1)(rng);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[(offset + i) % samples.size()];
      if (has_neighbors_throughout(s, horizon)) return s;
    }
  }
  throw std::runtime_error("no simulated sample with neighbors at every horizon offset; scenes are too short");
}

std::vector<SuiteResult> combined_grad_check(const GradCheckOptions& options, const NceConfig& nce) {
  return check_model_graph(options, nce, nce, {}, "combined(" + to_string(nce.mode) + ")");
}

std::vector<SuiteResult> snce_grad_check(const GradCheckOptions& options, const NceConfig& cfg,
                                         const NceConfig* analytic_cfg) {
  NceConfig eval_cfg = cfg;
  eval_cfg.contrastive_weight = 1.0;
  NceConfig grad_cfg = analytic_cfg ? *analytic_cfg : cfg;
  grad_cfg.contrastive_weight = 1.0;
  return check_model_graph(options, eval_cfg, grad_cfg, LossOptions{false}, "snce(" + to_string(cfg.mode) + ")");
}

std::vector<SuiteResult> run_gradcheck_suites(const GradCheckOptions& options) {
  std::vector<SuiteResult> out;

  // Standalone MLP with a squared-error loss over every parameter.
  {
    Rng rng = make_rng(options.seed, {0x9cULL, 10});
    const std::size_t dims[] = {4, 8, 8};
    const Mlp net = Mlp::random(dims, rng);
    std::vector<double> input(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : input) v = u(rng);
    std::vector<double> target(8);
    for (auto& v : target) v = u(rng);
    const OutputLoss loss = [&](std::span<const double> y, std::vector<double>& g) {
      double sum = 0.0;
      g.assign(y.size(), 0.0);
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - target[i];
        sum += 0.5 * d * d;
        g[i] = d;
      }
      return sum;
    };
    const auto r = grad_check(net, input, loss, options.tolerance);
    out.push_back({"mlp", r.max_relative_error, net.parameter_count(), r.skipped_kinks, r.passed});
  }

  NceConfig nce;
  for (const auto mode : {DenominatorMode::per_horizon, DenominatorMode::joint}) {
    nce.mode = mode;
    for (auto& r : snce_grad_check(options, nce)) out.push_back(std::move(r));
  }
  nce.mode = DenominatorMode::per_horizon;
  for (auto& r : combined_grad_check(options, nce)) out.push_back(std::move(r));
  return out;
}

bool all_passed(const std::vector<SuiteResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const SuiteResult& r) { return r.passed; });
}

}  // namespace snce
