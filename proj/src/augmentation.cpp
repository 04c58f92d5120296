#include "snce/augmentation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace snce {

namespace {

AgentState draw_noise(double sigma, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double ex = normal(rng);
  const double ey = normal(rng);
  return {sigma * ex, sigma * ey};
}

void check_offset(const Sample& sample, std::size_t delta_t) {
  if (delta_t < 1 || delta_t > sample.pred_len) {
    throw std::invalid_argument("horizon offset " + std::to_string(delta_t) + " outside [1, " +
                                std::to_string(sample.pred_len) + "]");
  }
}

void append_negatives(const Sample& sample, std::size_t delta_t, const AugmentConfig& cfg, Rng& rng,
                      std::vector<AgentState>& points, std::vector<std::size_t>* sources) {
  std::uniform_real_distribution<double> radius(cfg.rho_min, cfg.rho_max);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(cfg.n_directions);
  for (const auto& nb : neighbors_at(sample, static_cast<std::ptrdiff_t>(delta_t))) {
    for (std::size_t p = 0; p < cfg.n_directions; ++p) {
      const double theta = step * static_cast<double>(p);
      const double rho = radius(rng);
      const AgentState eps = draw_noise(cfg.noise_weight, rng);
      points.push_back({nb.state.x + rho * std::cos(theta) + eps.x, nb.state.y + rho * std::sin(theta) + eps.y});
      if (sources) sources->push_back(nb.agent);
    }
  }
}

}  // namespace

void AugmentConfig::validate() const {
  if (!(rho_min > 0.0) || !(rho_min <= rho_max) || !std::isfinite(rho_max)) {
    throw std::invalid_argument("augmentation requires 0 < rho_min <= rho_max");
  }
  if (!(noise_weight >= 0.0) || !std::isfinite(noise_weight)) {
    throw std::invalid_argument("noise_weight must be >= 0");
  }
  if (n_directions < 1) throw std::invalid_argument("n_directions must be >= 1");
}

std::vector<AgentState> negative_keys(const Sample& sample, std::size_t delta_t, const AugmentConfig& cfg,
                                      Rng& rng) {
  cfg.validate();
  check_offset(sample, delta_t);
  std::vector<AgentState> points;
  append_negatives(sample, delta_t, cfg, rng, points, nullptr);
  return points;
}

AgentState positive_key(const Sample& sample, std::size_t delta_t, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  check_offset(sample, delta_t);
  return sample.primary_at(static_cast<std::ptrdiff_t>(delta_t)) + draw_noise(cfg.noise_weight, rng);
}

std::vector<KeyBundle> build_key_bundles(const Sample& sample, std::size_t horizon, const AugmentConfig& cfg,
                                         Rng& rng) {
  cfg.validate();
  if (horizon < 1 || horizon > sample.pred_len) {
    throw std::invalid_argument("sampling horizon " + std::to_string(horizon) + " must lie in [1, pred_len = " +
                                std::to_string(sample.pred_len) + "]");
  }
  std::vector<KeyBundle> bundles;
  bundles.reserve(horizon);
  for (std::size_t dt = 1; dt <= horizon; ++dt) {
    KeyBundle b;
    b.horizon_offset = dt;
    b.positive = positive_key(sample, dt, cfg, rng);
    append_negatives(sample, dt, cfg, rng, b.negatives, &b.source_neighbor);
    bundles.push_back(std::move(b));
  }
  return bundles;
}

}  // namespace snce
