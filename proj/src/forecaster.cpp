#include "snce/forecaster.hpp"

#include <stdexcept>
#include <string>

namespace snce {

namespace {

std::array<std::size_t, 3> dims3(std::size_t a, std::size_t b, std::size_t c) { return {a, b, c}; }

void expect_dims(const Mlp& net, std::size_t in, std::size_t out, const char* name) {
  if (net.in_dim() != in || net.out_dim() != out) {
    throw std::invalid_argument(std::string(name) + " expects " + std::to_string(in) + " -> " + std::to_string(out) +
                                ", has " + std::to_string(net.in_dim()) + " -> " + std::to_string(net.out_dim()));
  }
}

}  // namespace

Model Model::random(const ModelShape& s, Rng& rng) {
  const std::size_t w = s.hidden_width;
  Model m;
  m.shape = s;
  m.encoder.sequential = Mlp::random(dims3(2 * s.obs_len, w, w), rng);
  m.encoder.interaction = Mlp::random(dims3(kInteractionInputDim, w, w), rng);
  m.encoder.fusion = Mlp::random(dims3(2 * w, w, w), rng);
  m.decoder.net = Mlp::random(dims3(w, w, 2 * s.pred_len), rng);
  m.query = QueryHead::random(w, w, rng);
  m.key = KeyHead::random(w, rng);
  return m;
}

Model Model::zeros(const ModelShape& s) {
  const std::size_t w = s.hidden_width;
  Model m;
  m.shape = s;
  m.encoder.sequential = Mlp::zeros(dims3(2 * s.obs_len, w, w));
  m.encoder.interaction = Mlp::zeros(dims3(kInteractionInputDim, w, w));
  m.encoder.fusion = Mlp::zeros(dims3(2 * w, w, w));
  m.decoder.net = Mlp::zeros(dims3(w, w, 2 * s.pred_len));
  m.query = QueryHead::zeros(w, w);
  m.key = KeyHead::zeros(w);
  return m;
}

void Model::validate() const {
  const std::size_t w = shape.hidden_width;
  expect_dims(encoder.sequential, 2 * shape.obs_len, w, "sequential encoder");
  expect_dims(encoder.interaction, kInteractionInputDim, w, "interaction encoder");
  expect_dims(encoder.fusion, 2 * w, w, "fusion encoder");
  expect_dims(decoder.net, w, 2 * shape.pred_len, "decoder");
  expect_dims(query.net, w, kEmbeddingDim, "query head");
  expect_dims(key.net, kKeyInputDim, kEmbeddingDim, "key head");
}

std::vector<Mlp*> Model::networks() {
  return {&encoder.sequential, &encoder.interaction, &encoder.fusion, &decoder.net, &query.net, &key.net};
}

std::vector<const Mlp*> Model::networks() const {
  return {&encoder.sequential, &encoder.interaction, &encoder.fusion, &decoder.net, &query.net, &key.net};
}

bool Model::all_finite() const {
  for (const auto* net : networks()) {
    if (!net->all_finite()) return false;
  }
  return true;
}

std::vector<double*> Model::parameter_pointers() {
  std::vector<double*> out;
  for (auto* net : networks()) {
    auto p = net->parameter_pointers();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<double> sequential_features(const Sample& sample) {
  const AgentState anchor = sample.anchor();
  std::vector<double> out;
  out.reserve(2 * sample.obs_len);
  for (const auto& s : sample.observed()) {
    out.push_back(s.x - anchor.x);
    out.push_back(s.y - anchor.y);
  }
  return out;
}

std::vector<std::array<double, kInteractionInputDim>> interaction_features(const Sample& sample) {
  const std::size_t t = sample.current_frame();
  const AgentState anchor = sample.anchor();
  const AgentState primary_step = sample.obs_len > 1 ? anchor - sample.primary_at(-1) : AgentState{};
  std::vector<std::array<double, kInteractionInputDim>> out;
  for (const auto& nb : neighbors_at(sample, 0)) {
    AgentState step{};
    if (sample.obs_len > 1 && t > 0) {
      if (const auto& prev = sample.scene->at(t - 1, nb.agent)) step = nb.state - *prev;
    }
    out.push_back({nb.state.x - anchor.x, nb.state.y - anchor.y, step.x - primary_step.x, step.y - primary_step.y});
  }
  return out;
}

EncoderTrace encode_traced(const Sample& sample, const Encoder& encoder) {
  EncoderTrace trace;
  trace.sequential = mlp_forward(encoder.sequential, sequential_features(sample));
  const std::size_t width = encoder.interaction.out_dim();
  std::vector<double> pooled(width, 0.0);
  const auto features = interaction_features(sample);
  for (const auto& f : features) {
    trace.interaction.push_back(mlp_forward(encoder.interaction, f));
    const auto& out = trace.interaction.back().output();
    for (std::size_t d = 0; d < width; ++d) pooled[d] += out[d];
  }
  if (!features.empty()) {
    const double inv = 1.0 / static_cast<double>(features.size());
    for (auto& v : pooled) v *= inv;
  }
  std::vector<double> fused(trace.sequential.output());
  fused.insert(fused.end(), pooled.begin(), pooled.end());
  trace.fusion = mlp_forward(encoder.fusion, fused);
  return trace;
}

std::vector<double> encode(const Sample& sample, const Encoder& encoder) {
  return encode_traced(sample, encoder).hidden();
}

namespace {

Trajectory offsets_to_positions(std::span<const double> offsets, AgentState anchor) {
  Trajectory out(offsets.size() / 2);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {anchor.x + offsets[2 * k], anchor.y + offsets[2 * k + 1]};
  return out;
}

}  // namespace

Trajectory decode(std::span<const double> hidden, const Decoder& decoder, AgentState anchor) {
  return offsets_to_positions(mlp_forward(decoder.net, hidden).output(), anchor);
}

Trajectory predict(const Model& model, const Sample& sample) {
  return decode(encode(sample, model.encoder), model.decoder, sample.anchor());
}

double task_loss(const Trajectory& predicted, const Trajectory& truth) {
  if (predicted.size() != truth.size() || predicted.empty()) {
    throw std::invalid_argument("task loss needs equal non-empty trajectories, got " +
                                std::to_string(predicted.size()) + " and " + std::to_string(truth.size()));
  }
  double s = 0.0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    const double dx = predicted[k].x - truth[k].x;
    const double dy = predicted[k].y - truth[k].y;
    s += dx * dx + dy * dy;
  }
  return s / static_cast<double>(predicted.size());
}

ModelGrad ModelGrad::zeros_like(const Model& m) {
  return {ParamGrad::zeros_like(m.encoder.sequential), ParamGrad::zeros_like(m.encoder.interaction),
          ParamGrad::zeros_like(m.encoder.fusion),     ParamGrad::zeros_like(m.decoder.net),
          ParamGrad::zeros_like(m.query.net),          ParamGrad::zeros_like(m.key.net)};
}

std::vector<ParamGrad*> ModelGrad::parts() { return {&sequential, &interaction, &fusion, &decoder, &query, &key}; }

std::vector<const ParamGrad*> ModelGrad::parts() const {
  return {&sequential, &interaction, &fusion, &decoder, &query, &key};
}

void ModelGrad::add(const ModelGrad& other, double factor) {
  auto mine = parts();
  auto theirs = other.parts();
  for (std::size_t i = 0; i < mine.size(); ++i) mine[i]->add(*theirs[i], factor);
}

void ModelGrad::scale(double factor) {
  for (auto* p : parts()) p->scale(factor);
}

std::vector<double> ModelGrad::flatten() const {
  std::vector<double> out;
  for (const auto* p : parts()) {
    auto f = p->flatten();
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

LossValue combined_loss(const Sample& sample, const Model& model, std::span<const KeyBundle> bundles,
                        const NceConfig& nce, const LossOptions& options) {
  nce.validate();
  LossValue out;
  out.grad = ModelGrad::zeros_like(model);

  const auto enc = encode_traced(sample, model.encoder);
  const auto& h = enc.hidden();
  const std::size_t width = h.size();
  std::vector<double> grad_h(width, 0.0);

  // Task branch.
  const auto dec = mlp_forward(model.decoder.net, h);
  const AgentState anchor = sample.anchor();
  const auto predicted = offsets_to_positions(dec.output(), anchor);
  const auto truth = sample.future();
  out.task = task_loss(predicted, truth);
  if (options.include_task) {
    std::vector<double> grad_offsets(dec.output().size());
    const double inv = 2.0 / static_cast<double>(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k) {
      grad_offsets[2 * k] = inv * (predicted[k].x - truth[k].x);
      grad_offsets[2 * k + 1] = inv * (predicted[k].y - truth[k].y);
    }
    const auto gh = mlp_backward_into(model.decoder.net, dec, grad_offsets, out.grad.decoder);
    for (std::size_t d = 0; d < width; ++d) grad_h[d] += gh[d];
  }

  // Contrastive branch.
  const double lambda = nce.contrastive_weight;
  const auto qtrace = mlp_forward(model.query.net, h);
  const bool nce_gradients = lambda != 0.0;
  auto snce = snce_loss(qtrace.output(), bundles, model.key, anchor, nce, nce_gradients);
  out.nce = snce.loss;
  if (nce_gradients && snce.active_bundles > 0) {
    for (auto& v : snce.grad_query) v *= lambda;
    const auto gh = mlp_backward_into(model.query.net, qtrace, snce.grad_query, out.grad.query);
    for (std::size_t d = 0; d < width; ++d) grad_h[d] += gh[d];
    out.grad.key.add(snce.grad_key_head, lambda);
  }

  out.combined = (options.include_task ? out.task : 0.0) + lambda * out.nce;

  // Encoder: fusion -> (sequential | mean-pooled interaction).
  const auto grad_fused = mlp_backward_into(model.encoder.fusion, enc.fusion, grad_h, out.grad.fusion);
  const std::size_t seq_width = model.encoder.sequential.out_dim();
  const std::span<const double> grad_seq(grad_fused.data(), seq_width);
  mlp_backward_into(model.encoder.sequential, enc.sequential, grad_seq, out.grad.sequential);
  if (!enc.interaction.empty()) {
    const std::size_t pool_width = model.encoder.interaction.out_dim();
    std::vector<double> grad_member(grad_fused.begin() + static_cast<std::ptrdiff_t>(seq_width),
                                    grad_fused.begin() + static_cast<std::ptrdiff_t>(seq_width + pool_width));
    const double inv = 1.0 / static_cast<double>(enc.interaction.size());
    for (auto& v : grad_member) v *= inv;
    for (const auto& t : enc.interaction) {
      mlp_backward_into(model.encoder.interaction, t, grad_member, out.grad.interaction);
    }
  }
  return out;
}

LossValue combined_loss(const Sample& sample, const Model& model, const NceConfig& nce, const AugmentConfig& aug,
                        Rng& rng, const LossOptions& options) {
  const auto bundles = build_key_bundles(sample, nce.horizon, aug, rng);
  return combined_loss(sample, model, bundles, nce, options);
}

}  // namespace snce
