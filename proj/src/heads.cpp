#include "snce/heads.hpp"

#include <array>
#include <stdexcept>
#include <string>

namespace snce {

QueryHead QueryHead::random(std::size_t hidden_dim, std::size_t width, Rng& rng) {
  const std::array<std::size_t, 3> dims{hidden_dim, width, kEmbeddingDim};
  Mlp net = Mlp::random(dims, rng);
  for (auto& w : net.mutable_layers().back().weight) w *= kQueryOutputInitScale;
  net.touch();
  return {std::move(net)};
}

QueryHead QueryHead::zeros(std::size_t hidden_dim, std::size_t width) {
  const std::array<std::size_t, 3> dims{hidden_dim, width, kEmbeddingDim};
  return {Mlp::zeros(dims)};
}

KeyHead KeyHead::random(std::size_t width, Rng& rng) {
  const std::array<std::size_t, 3> dims{kKeyInputDim, width, kEmbeddingDim};
  return {Mlp::random(dims, rng)};
}

KeyHead KeyHead::zeros(std::size_t width) {
  const std::array<std::size_t, 3> dims{kKeyInputDim, width, kEmbeddingDim};
  return {Mlp::zeros(dims)};
}

void validate_heads(const QueryHead& query, const KeyHead& key) {
  if (query.net.out_dim() != kEmbeddingDim) throw std::invalid_argument("query head must emit 8 values");
  if (key.net.out_dim() != kEmbeddingDim) throw std::invalid_argument("key head must emit 8 values");
  if (key.net.in_dim() != kKeyInputDim) throw std::invalid_argument("key head must take (x, y, dt) input");
}

std::vector<double> embed_query(const QueryHead& head, std::span<const double> hidden) {
  return mlp_forward(head.net, hidden).output();
}

std::array<double, kKeyInputDim> key_features(AgentState egocentric, std::size_t delta_t, std::size_t horizon) {
  if (horizon < 1 || delta_t < 1 || delta_t > horizon) {
    throw std::invalid_argument("key offset " + std::to_string(delta_t) + " outside [1, " + std::to_string(horizon) +
                                "]");
  }
  return {egocentric.x, egocentric.y, static_cast<double>(delta_t) / static_cast<double>(horizon)};
}

std::vector<double> embed_key(const KeyHead& head, AgentState egocentric, std::size_t delta_t, std::size_t horizon) {
  const auto features = key_features(egocentric, delta_t, horizon);
  return mlp_forward(head.net, features).output();
}

double similarity(std::span<const double> q, std::span<const double> k) { return dot(q, k); }

}  // namespace snce
