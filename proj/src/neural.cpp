#include "snce/neural.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace snce {

namespace {

std::atomic<std::uint64_t> g_revision_counter{0};
thread_local ReluPatternRecorder* g_active_recorder = nullptr;

std::string dims_string(std::size_t expected, std::size_t actual) {
  return "expected " + std::to_string(expected) + ", got " + std::to_string(actual);
}

std::vector<DenseLayer> make_layers(std::span<const std::size_t> dims) {
  if (dims.size() < 2) throw std::invalid_argument("an Mlp needs at least input and output dimensions");
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    if (dims[k] == 0 || dims[k + 1] == 0) throw std::invalid_argument("Mlp dimensions must be positive");
    DenseLayer layer;
    layer.in_dim = dims[k];
    layer.out_dim = dims[k + 1];
    layer.weight.assign(layer.in_dim * layer.out_dim, 0.0);
    layer.bias.assign(layer.out_dim, 0.0);
    layer.activation = (k + 2 == dims.size()) ? Activation::identity : Activation::relu;
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("an Mlp needs at least one layer");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    if (l.weight.size() != l.in_dim * l.out_dim || l.bias.size() != l.out_dim) {
      throw std::invalid_argument("layer " + std::to_string(k) + " parameter sizes disagree with its shape");
    }
    if (k > 0 && layers_[k - 1].out_dim != l.in_dim) {
      throw std::invalid_argument("layer " + std::to_string(k) + " input " +
                                  dims_string(layers_[k - 1].out_dim, l.in_dim));
    }
  }
  touch();
}

Mlp Mlp::random(std::span<const std::size_t> dims, Rng& rng) {
  auto layers = make_layers(dims);
  for (auto& layer : layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.in_dim));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& w : layer.weight) w = u(rng);
  }
  return Mlp(std::move(layers));
}

Mlp Mlp::zeros(std::span<const std::size_t> dims) { return Mlp(make_layers(dims)); }

std::size_t Mlp::in_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim; }
std::size_t Mlp::out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim; }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_) {
    if (!std::all_of(l.weight.begin(), l.weight.end(), [](double v) { return std::isfinite(v); })) return false;
    if (!std::all_of(l.bias.begin(), l.bias.end(), [](double v) { return std::isfinite(v); })) return false;
  }
  return true;
}

void Mlp::touch() { revision_ = ++g_revision_counter; }

std::vector<double*> Mlp::parameter_pointers() {
  std::vector<double*> out;
  out.reserve(parameter_count());
  for (auto& l : layers_) {
    for (auto& w : l.weight) out.push_back(&w);
    for (auto& b : l.bias) out.push_back(&b);
  }
  return out;
}

ForwardTrace mlp_forward(const Mlp& net, std::span<const double> input) {
  if (input.size() != net.in_dim()) {
    throw std::invalid_argument("Mlp input size mismatch: " + dims_string(net.in_dim(), input.size()));
  }
  ForwardTrace trace;
  trace.revision = net.revision();
  trace.activations.reserve(net.layers().size() + 1);
  trace.activations.emplace_back(input.begin(), input.end());
  for (const auto& layer : net.layers()) {
    const auto& x = trace.activations.back();
    std::vector<double> y(layer.bias);
    const double* w = layer.weight.data();
    for (std::size_t r = 0; r < layer.out_dim; ++r, w += layer.in_dim) {
      double acc = 0.0;
      for (std::size_t c = 0; c < layer.in_dim; ++c) acc += w[c] * x[c];
      y[r] += acc;
    }
    if (layer.activation == Activation::relu) {
      for (auto& v : y) {
        const bool on = v > 0.0;
        if (g_active_recorder) g_active_recorder->record(on);
        if (!on) v = 0.0;
      }
    }
    trace.activations.push_back(std::move(y));
  }
  return trace;
}

ParamGrad ParamGrad::zeros_like(const Mlp& net) {
  ParamGrad g;
  g.layers.reserve(net.layers().size());
  for (const auto& l : net.layers()) {
    g.layers.push_back({std::vector<double>(l.weight.size(), 0.0), std::vector<double>(l.bias.size(), 0.0)});
  }
  return g;
}

bool ParamGrad::congruent_with(const Mlp& net) const {
  if (layers.size() != net.layers().size()) return false;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].weight.size() != net.layers()[k].weight.size() ||
        layers[k].bias.size() != net.layers()[k].bias.size()) {
      return false;
    }
  }
  return true;
}

void ParamGrad::add(const ParamGrad& other, double factor) {
  if (other.layers.size() != layers.size()) throw std::invalid_argument("ParamGrad shape mismatch in add");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto& a = layers[k];
    const auto& b = other.layers[k];
    if (a.weight.size() != b.weight.size() || a.bias.size() != b.bias.size()) {
      throw std::invalid_argument("ParamGrad shape mismatch in add");
    }
    for (std::size_t i = 0; i < a.weight.size(); ++i) a.weight[i] += factor * b.weight[i];
    for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += factor * b.bias[i];
  }
}

void ParamGrad::scale(double factor) {
  for (auto& l : layers) {
    for (auto& v : l.weight) v *= factor;
    for (auto& v : l.bias) v *= factor;
  }
}

bool ParamGrad::all_zero() const { return max_abs() == 0.0; }

double ParamGrad::max_abs() const {
  double m = 0.0;
  for (const auto& l : layers) {
    for (double v : l.weight) m = std::max(m, std::abs(v));
    for (double v : l.bias) m = std::max(m, std::abs(v));
  }
  return m;
}

std::vector<double> ParamGrad::flatten() const {
  std::vector<double> out;
  for (const auto& l : layers) {
    out.insert(out.end(), l.weight.begin(), l.weight.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

std::vector<double*> ParamGrad::value_pointers() {
  std::vector<double*> out;
  for (auto& l : layers) {
    for (auto& v : l.weight) out.push_back(&v);
    for (auto& v : l.bias) out.push_back(&v);
  }
  return out;
}

std::vector<double> mlp_backward_into(const Mlp& net, const ForwardTrace& trace, std::span<const double> upstream,
                                      ParamGrad& grad) {
  const auto& layers = net.layers();
  if (trace.revision != net.revision() || trace.activations.size() != layers.size() + 1) {
    throw std::invalid_argument("stale or mismatched forward trace for this Mlp");
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (trace.activations[k].size() != layers[k].in_dim) {
      throw std::invalid_argument("forward trace layer " + std::to_string(k) + " shape mismatch");
    }
  }
  if (upstream.size() != net.out_dim()) {
    throw std::invalid_argument("upstream gradient size mismatch: " + dims_string(net.out_dim(), upstream.size()));
  }
  if (!grad.congruent_with(net)) throw std::invalid_argument("ParamGrad not congruent with Mlp");

  std::vector<double> g(upstream.begin(), upstream.end());
  for (std::size_t k = layers.size(); k-- > 0;) {
    const auto& layer = layers[k];
    const auto& x = trace.activations[k];
    const auto& y = trace.activations[k + 1];
    if (layer.activation == Activation::relu) {
      for (std::size_t r = 0; r < g.size(); ++r) {
        if (!(y[r] > 0.0)) g[r] = 0.0;
      }
    }
    auto& lg = grad.layers[k];
    std::vector<double> dx(layer.in_dim, 0.0);
    const double* w = layer.weight.data();
    double* dw = lg.weight.data();
    for (std::size_t r = 0; r < layer.out_dim; ++r, w += layer.in_dim, dw += layer.in_dim) {
      const double gr = g[r];
      lg.bias[r] += gr;
      if (gr == 0.0) continue;
      for (std::size_t c = 0; c < layer.in_dim; ++c) {
        dw[c] += gr * x[c];
        dx[c] += w[c] * gr;
      }
    }
    g = std::move(dx);
  }
  return g;
}

Backward mlp_backward(const Mlp& net, const ForwardTrace& trace, std::span<const double> upstream) {
  Backward out{ParamGrad::zeros_like(net), {}};
  out.input = mlp_backward_into(net, trace, upstream, out.params);
  return out;
}

ReluPatternRecorder::ReluPatternRecorder() : previous_(g_active_recorder) { g_active_recorder = this; }

ReluPatternRecorder::~ReluPatternRecorder() { g_active_recorder = previous_; }

void ReluPatternRecorder::record(bool on) {
  hash_ = (hash_ ^ (on ? 0x9dULL : 0x3bULL)) * 0x100000001b3ULL;
  ++units_;
}

FiniteDifferenceReport finite_difference_check(std::span<double* const> params, std::span<const double> analytic,
                                               const std::function<double()>& eval,
                                               const FiniteDifferenceOptions& options) {
  if (params.size() != analytic.size()) {
    throw std::invalid_argument("finite-difference check: " + dims_string(params.size(), analytic.size()) +
                                " analytic entries");
  }
  FiniteDifferenceReport report;
  if (params.empty()) return report;

  std::uint64_t base_signature = 0;
  double floor = options.abs_floor;
  {
    ReluPatternRecorder rec;
    const double base = eval();
    base_signature = rec.signature();
    // Rounding in the two evaluations is relative to the loss itself.
    if (std::isfinite(base)) floor *= std::max(1.0, std::abs(base));
  }

  auto probe = [&](std::size_t i) -> bool {
    double& p = *params[i];
    const double original = p;
    double plus = 0.0;
    double minus = 0.0;
    std::uint64_t sig_plus = 0;
    std::uint64_t sig_minus = 0;
    {
      p = original + options.step;
      ReluPatternRecorder rec;
      plus = eval();
      sig_plus = rec.signature();
    }
    {
      p = original - options.step;
      ReluPatternRecorder rec;
      minus = eval();
      sig_minus = rec.signature();
    }
    p = original;
    if (sig_plus != base_signature || sig_minus != base_signature) {
      ++report.skipped_kinks;
      return false;
    }
    const double numeric = (plus - minus) / (2.0 * options.step);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), floor});
    double rel = std::abs(a - numeric) / denom;
    if (!std::isfinite(rel)) rel = std::numeric_limits<double>::infinity();
    if (report.checked == 0 || rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_index = i;
    }
    ++report.checked;
    return true;
  };

  if (options.probes == 0 || options.probes >= params.size()) {
    for (std::size_t i = 0; i < params.size(); ++i) probe(i);
  } else {
    Rng rng{derive_seed(options.seed, {0xfdULL})};
    std::uniform_int_distribution<std::size_t> pick(0, params.size() - 1);
    // Kinked probes are redrawn; the attempt cap keeps a pathological graph
    // from looping forever.
    std::size_t attempts = 0;
    while (report.checked < options.probes && attempts < 20 * options.probes) {
      probe(pick(rng));
      ++attempts;
    }
  }
  report.passed = report.checked > 0 ? report.max_relative_error < options.tolerance : report.skipped_kinks == 0;
  return report;
}

GradCheckReport grad_check(const Mlp& net, std::span<const double> input, const OutputLoss& loss, double tolerance,
                           const ParamGrad* analytic_override) {
  Mlp probe_net = net;
  const auto trace = mlp_forward(probe_net, input);
  std::vector<double> upstream(probe_net.out_dim(), 0.0);
  loss(trace.output(), upstream);
  ParamGrad analytic = analytic_override ? *analytic_override : mlp_backward(probe_net, trace, upstream).params;
  if (!analytic.congruent_with(probe_net)) throw std::invalid_argument("grad_check: gradient shape mismatch");

  const std::vector<double> input_copy(input.begin(), input.end());
  std::vector<double> scratch;
  auto eval = [&] {
    const auto t = mlp_forward(probe_net, input_copy);
    return loss(t.output(), scratch);
  };

  GradCheckReport report;
  FiniteDifferenceOptions opts;
  opts.tolerance = tolerance;
  for (std::size_t k = 0; k < probe_net.layers().size(); ++k) {
    auto& layer = probe_net.mutable_layers()[k];
    for (int part = 0; part < 2; ++part) {
      auto& values = part == 0 ? layer.weight : layer.bias;
      const auto& grads = part == 0 ? analytic.layers[k].weight : analytic.layers[k].bias;
      std::vector<double*> ptrs;
      ptrs.reserve(values.size());
      for (auto& v : values) ptrs.push_back(&v);
      const auto r = finite_difference_check(ptrs, grads, eval, opts);
      (part == 0 ? report.layer_weight_error : report.layer_bias_error).push_back(r.max_relative_error);
      report.max_relative_error = std::max(report.max_relative_error, r.max_relative_error);
      report.skipped_kinks += r.skipped_kinks;
      report.passed = report.passed && r.passed;
    }
  }
  return report;
}

AdamState AdamState::for_net(const Mlp& net, const AdamConfig& config) {
  return AdamState{config, 0, ParamGrad::zeros_like(net), ParamGrad::zeros_like(net)};
}

void adam_step(Mlp& net, const ParamGrad& grad, AdamState& state, std::string_view name) {
  if (!grad.congruent_with(net) || !state.first_moment.congruent_with(net) ||
      !state.second_moment.congruent_with(net)) {
    throw std::invalid_argument("adam_step: gradient or moment shapes disagree with " + std::string(name));
  }
  for (std::size_t k = 0; k < grad.layers.size(); ++k) {
    const auto& l = grad.layers[k];
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(l.weight.begin(), l.weight.end(), finite) || !std::all_of(l.bias.begin(), l.bias.end(), finite)) {
      throw std::invalid_argument("adam_step: non-finite gradient in " + std::string(name) + " layer " +
                                  std::to_string(k));
    }
  }

  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  };
  auto& layers = net.mutable_layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    update(layers[k].weight, grad.layers[k].weight, state.first_moment.layers[k].weight,
           state.second_moment.layers[k].weight);
    update(layers[k].bias, grad.layers[k].bias, state.first_moment.layers[k].bias,
           state.second_moment.layers[k].bias);
  }
  net.touch();
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: " + dims_string(a.size(), b.size()));
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace snce
