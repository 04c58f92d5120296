#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "snce/neural.hpp"
#include "snce/scene.hpp"

namespace snce {

inline constexpr std::size_t kEmbeddingDim = 8;
inline constexpr std::size_t kKeyInputDim = 3;
/// Shrinks the query head's output layer at initialization so that
/// dot-product logits start near zero instead of in the hundreds at tau 0.1.
inline constexpr double kQueryOutputInitScale = 0.1;

/// Projection from the encoder's hidden vector to the contrastive query space.
struct QueryHead {
  Mlp net;

  static QueryHead random(std::size_t hidden_dim, std::size_t width, Rng& rng);
  static QueryHead zeros(std::size_t hidden_dim, std::size_t width);
};

/// Embeds a candidate future location (egocentric x, y) together with its
/// horizon offset normalized to (0, 1].
struct KeyHead {
  Mlp net;

  static KeyHead random(std::size_t width, Rng& rng);
  static KeyHead zeros(std::size_t width);
};

void validate_heads(const QueryHead& query, const KeyHead& key);

std::vector<double> embed_query(const QueryHead& head, std::span<const double> hidden);

/// Input row fed to the key head: (x, y, delta_t / horizon).
std::array<double, kKeyInputDim> key_features(AgentState egocentric, std::size_t delta_t, std::size_t horizon);

std::vector<double> embed_key(const KeyHead& head, AgentState egocentric, std::size_t delta_t, std::size_t horizon);

/// Plain dot product; magnitudes matter.
double similarity(std::span<const double> q, std::span<const double> k);

}  // namespace snce
