#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "snce/augmentation.hpp"
#include "snce/heads.hpp"
#include "snce/neural.hpp"

namespace snce {

/// How horizon offsets share a softmax.
///  - per_horizon: one InfoNCE term per offset (its positive against its own
///    negatives), averaged over offsets that have negatives.
///  - joint: a single pool holding every offset's positive and negatives;
///    each offset's positive is scored against the whole pool, and the
///    per-offset terms are averaged.
enum class DenominatorMode { per_horizon, joint };

std::string to_string(DenominatorMode mode);
DenominatorMode denominator_mode_from_string(const std::string& name);

struct NceConfig {
  double temperature = 0.1;
  std::size_t horizon = 4;
  double contrastive_weight = 2.0;
  DenominatorMode mode = DenominatorMode::per_horizon;

  void validate() const;
  friend bool operator==(const NceConfig&, const NceConfig&) = default;
};

/// One softmax cross-entropy over {positive} + negatives with logits q.k / tau.
struct NceTerm {
  double loss = 0.0;
  std::vector<double> grad_query;
  /// Index 0 is the positive key, then negatives in input order.
  std::vector<std::vector<double>> grad_keys;
  /// Softmax over the same ordering as grad_keys.
  std::vector<double> probabilities;
  double positive_probability = 1.0;
};

NceTerm infonce(std::span<const double> query, std::span<const double> positive,
                const std::vector<std::vector<double>>& negatives, double temperature);

/// Log-sum-exp with the maximum factored out.
double log_sum_exp(std::span<const double> values);

struct SnceResult {
  double loss = 0.0;
  std::vector<double> grad_query;
  ParamGrad grad_key_head;
  std::size_t active_bundles = 0;
};

/// Social-NCE objective for one query. Key locations are translated into the
/// frame centred on `origin` (the primary agent's last observed position)
/// before embedding. Bundles must carry offsets 1..cfg.horizon in order.
/// The contrastive weight is not applied here.
/// With `with_gradients` false only the loss is evaluated.
SnceResult snce_loss(std::span<const double> query, std::span<const KeyBundle> bundles, const KeyHead& key_head,
                     AgentState origin, const NceConfig& cfg, bool with_gradients = true);

}  // namespace snce
