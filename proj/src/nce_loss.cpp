#include "snce/nce_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace snce {

std::string to_string(DenominatorMode mode) {
  return mode == DenominatorMode::joint ? "joint" : "per_horizon";
}

DenominatorMode denominator_mode_from_string(const std::string& name) {
  if (name == "per_horizon") return DenominatorMode::per_horizon;
  if (name == "joint") return DenominatorMode::joint;
  throw std::invalid_argument("unknown denominator mode '" + name + "' (expected per_horizon or joint)");
}

void NceConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw std::invalid_argument("temperature must be > 0");
  if (horizon < 1) throw std::invalid_argument("sampling horizon must be >= 1");
  if (!(contrastive_weight >= 0.0) || !std::isfinite(contrastive_weight)) {
    throw std::invalid_argument("contrastive weight must be >= 0");
  }
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

namespace {

std::vector<double> softmax_from_logits(std::span<const double> logits, double lse) {
  std::vector<double> p(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) p[j] = std::exp(logits[j] - lse);
  return p;
}

double checked_logit(std::span<const double> q, std::span<const double> k, double tau, std::size_t index) {
  const double z = similarity(q, k) / tau;
  if (!std::isfinite(z)) throw std::domain_error("non-finite logit for key " + std::to_string(index));
  return z;
}

}  // namespace

NceTerm infonce(std::span<const double> query, std::span<const double> positive,
                const std::vector<std::vector<double>>& negatives, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  const std::size_t n = negatives.size() + 1;
  auto key = [&](std::size_t j) -> std::span<const double> { return j == 0 ? positive : negatives[j - 1]; };

  std::vector<double> logits(n);
  for (std::size_t j = 0; j < n; ++j) logits[j] = checked_logit(query, key(j), temperature, j);
  const double lse = log_sum_exp(logits);

  NceTerm term;
  term.probabilities = softmax_from_logits(logits, lse);
  term.loss = lse - logits[0];
  term.positive_probability = term.probabilities[0];

  // dL/dz_j = p_j - [j == 0]; z_j = q.k_j / tau.
  term.grad_query.assign(query.size(), 0.0);
  term.grad_keys.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double dz = (term.probabilities[j] - (j == 0 ? 1.0 : 0.0)) / temperature;
    const auto k = key(j);
    auto& gk = term.grad_keys[j];
    gk.resize(query.size());
    for (std::size_t d = 0; d < query.size(); ++d) {
      term.grad_query[d] += dz * k[d];
      gk[d] = dz * query[d];
    }
  }
  return term;
}

SnceResult snce_loss(std::span<const double> query, std::span<const KeyBundle> bundles, const KeyHead& key_head,
                     AgentState origin, const NceConfig& cfg, bool with_gradients) {
  cfg.validate();
  if (bundles.size() != cfg.horizon) {
    throw std::invalid_argument("expected " + std::to_string(cfg.horizon) + " key bundles, got " +
                                std::to_string(bundles.size()));
  }
  for (std::size_t b = 0; b < bundles.size(); ++b) {
    if (bundles[b].horizon_offset != b + 1) {
      throw std::invalid_argument("key bundle " + std::to_string(b) + " has offset " +
                                  std::to_string(bundles[b].horizon_offset) + ", expected " + std::to_string(b + 1));
    }
  }

  SnceResult result;
  result.grad_query.assign(query.size(), 0.0);
  if (with_gradients) result.grad_key_head = ParamGrad::zeros_like(key_head.net);

  // Embed every key of every bundle that has negatives; positive first.
  struct Embedded {
    std::size_t bundle;
    std::vector<ForwardTrace> traces;
  };
  std::vector<Embedded> active;
  for (const auto& bundle : bundles) {
    if (bundle.negatives.empty()) continue;
    Embedded e{bundle.horizon_offset, {}};
    e.traces.reserve(bundle.negatives.size() + 1);
    auto embed = [&](AgentState location) {
      const auto features = key_features(location - origin, bundle.horizon_offset, cfg.horizon);
      e.traces.push_back(mlp_forward(key_head.net, features));
    };
    embed(bundle.positive);
    for (const auto& neg : bundle.negatives) embed(neg);
    active.push_back(std::move(e));
  }
  result.active_bundles = active.size();
  if (active.empty()) return result;

  const double inv_terms = 1.0 / static_cast<double>(active.size());
  auto backprop_key = [&](const ForwardTrace& trace, std::span<const double> grad_key) {
    mlp_backward_into(key_head.net, trace, grad_key, result.grad_key_head);
  };

  if (cfg.mode == DenominatorMode::per_horizon) {
    for (const auto& e : active) {
      std::vector<std::vector<double>> negatives;
      negatives.reserve(e.traces.size() - 1);
      for (std::size_t j = 1; j < e.traces.size(); ++j) negatives.push_back(e.traces[j].output());
      const auto term = infonce(query, e.traces[0].output(), negatives, cfg.temperature);
      result.loss += inv_terms * term.loss;
      if (!with_gradients) continue;
      for (std::size_t d = 0; d < query.size(); ++d) result.grad_query[d] += inv_terms * term.grad_query[d];
      for (std::size_t j = 0; j < e.traces.size(); ++j) {
        auto g = term.grad_keys[j];
        for (auto& v : g) v *= inv_terms;
        backprop_key(e.traces[j], g);
      }
    }
    return result;
  }

  // Joint pool: logits over every key of every active bundle.
  std::vector<double> logits;
  std::vector<const ForwardTrace*> pool;
  std::vector<std::size_t> positive_index;
  for (const auto& e : active) {
    positive_index.push_back(pool.size());
    for (const auto& t : e.traces) {
      logits.push_back(checked_logit(query, t.output(), cfg.temperature, pool.size()));
      pool.push_back(&t);
    }
  }
  const double lse = log_sum_exp(logits);
  for (std::size_t a : positive_index) result.loss += inv_terms * (lse - logits[a]);
  if (!with_gradients) return result;

  auto dz = softmax_from_logits(logits, lse);
  for (std::size_t a : positive_index) dz[a] -= inv_terms;
  std::vector<double> grad_key(query.size());
  for (std::size_t j = 0; j < pool.size(); ++j) {
    const double s = dz[j] / cfg.temperature;
    const auto& k = pool[j]->output();
    for (std::size_t d = 0; d < query.size(); ++d) {
      result.grad_query[d] += s * k[d];
      grad_key[d] = s * query[d];
    }
    backprop_key(*pool[j], grad_key);
  }
  return result;
}

}  // namespace snce
