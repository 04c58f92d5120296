#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "snce/augmentation.hpp"
#include "snce/heads.hpp"
#include "snce/neural.hpp"
#include "snce/nce_loss.hpp"
#include "snce/scene.hpp"

namespace snce {

inline constexpr std::size_t kInteractionInputDim = 4;

struct ModelShape {
  std::size_t obs_len = 8;
  std::size_t pred_len = 12;
  std::size_t hidden_width = 64;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// f = fusion(concat(sequential(history), mean_j interaction(neighbor_j))).
struct Encoder {
  Mlp sequential;
  Mlp interaction;
  Mlp fusion;
};

/// Maps the hidden vector to pred_len direct (x, y) offsets from the anchor.
struct Decoder {
  Mlp net;
};

struct Model {
  ModelShape shape;
  Encoder encoder;
  Decoder decoder;
  QueryHead query;
  KeyHead key;

  static Model random(const ModelShape& shape, Rng& rng);
  static Model zeros(const ModelShape& shape);

  /// Throws if any network's dimensions disagree with `shape`.
  void validate() const;
  bool all_finite() const;
  std::vector<double*> parameter_pointers();
  std::vector<Mlp*> networks();
  std::vector<const Mlp*> networks() const;
};

/// Names matching the order of Model::networks().
inline constexpr std::array<const char*, 6> kNetworkNames = {
    "sequential_encoder", "interaction_encoder", "fusion_encoder", "decoder", "query_head", "key_head"};

/// Primary history in the egocentric frame, flattened (x0, y0, x1, y1, ...).
std::vector<double> sequential_features(const Sample& sample);

/// Per neighbor present at t: relative position and relative one-frame
/// displacement (dx_j - dx_i, dy_j - dy_i). A neighbor without a position at
/// t - 1 contributes zero displacement of its own.
std::vector<std::array<double, kInteractionInputDim>> interaction_features(const Sample& sample);

struct EncoderTrace {
  ForwardTrace sequential;
  std::vector<ForwardTrace> interaction;
  ForwardTrace fusion;

  const std::vector<double>& hidden() const { return fusion.output(); }
};

EncoderTrace encode_traced(const Sample& sample, const Encoder& encoder);
std::vector<double> encode(const Sample& sample, const Encoder& encoder);

Trajectory decode(std::span<const double> hidden, const Decoder& decoder, AgentState anchor);

/// Deterministic point forecast for the sample's primary agent.
Trajectory predict(const Model& model, const Sample& sample);

/// Mean squared Euclidean error over the prediction window.
double task_loss(const Trajectory& predicted, const Trajectory& truth);

struct ModelGrad {
  ParamGrad sequential;
  ParamGrad interaction;
  ParamGrad fusion;
  ParamGrad decoder;
  ParamGrad query;
  ParamGrad key;

  static ModelGrad zeros_like(const Model& model);
  void add(const ModelGrad& other, double scale = 1.0);
  void scale(double factor);
  std::vector<double> flatten() const;
  std::vector<ParamGrad*> parts();
  std::vector<const ParamGrad*> parts() const;
};

struct LossOptions {
  /// Ablates the task branch; decoder gradients are then exactly zero.
  bool include_task = true;
};

struct LossValue {
  double task = 0.0;
  double nce = 0.0;
  double combined = 0.0;
  ModelGrad grad;
};

/// task + contrastive_weight * Social-NCE, with gradients for every network.
/// With a zero contrastive weight the NCE value is still reported but no
/// gradient reaches the query or key heads.
LossValue combined_loss(const Sample& sample, const Model& model, std::span<const KeyBundle> bundles,
                        const NceConfig& nce, const LossOptions& options = {});

/// Same, drawing fresh keys from `rng`.
LossValue combined_loss(const Sample& sample, const Model& model, const NceConfig& nce, const AugmentConfig& aug,
                        Rng& rng, const LossOptions& options = {});

}  // namespace snce
