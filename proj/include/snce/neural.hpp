#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snce/random.hpp"

namespace snce {

enum class Activation { identity, relu };

/// y = act(W x + b), W stored row-major as out_dim x in_dim.
struct DenseLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> weight;
  std::vector<double> bias;
  Activation activation = Activation::identity;
};

/// Stack of dense layers. Every parameter mutation made through
/// `mutable_layers()` that should invalidate outstanding traces must call
/// `touch()`; adam_step does so.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  /// dims = {in, hidden..., out}; ReLU on hidden layers, identity on output.
  /// Weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), biases zero.
  static Mlp random(std::span<const std::size_t> dims, Rng& rng);
  static Mlp zeros(std::span<const std::size_t> dims);

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::size_t parameter_count() const;
  bool all_finite() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  std::uint64_t revision() const { return revision_; }
  void touch();

  /// Raw pointers to every parameter, layer by layer, weights before biases.
  std::vector<double*> parameter_pointers();

 private:
  std::vector<DenseLayer> layers_;
  std::uint64_t revision_ = 0;
};

/// Post-activation values of every layer; activations[0] is the input.
struct ForwardTrace {
  std::uint64_t revision = 0;
  std::vector<std::vector<double>> activations;

  const std::vector<double>& output() const { return activations.back(); }
};

ForwardTrace mlp_forward(const Mlp& net, std::span<const double> input);

struct LayerGrad {
  std::vector<double> weight;
  std::vector<double> bias;
};

/// Gradient of a scalar with respect to every parameter of one Mlp.
struct ParamGrad {
  std::vector<LayerGrad> layers;

  static ParamGrad zeros_like(const Mlp& net);
  bool congruent_with(const Mlp& net) const;
  void add(const ParamGrad& other, double scale = 1.0);
  void scale(double factor);
  bool all_zero() const;
  double max_abs() const;
  /// Flattened in the same order as Mlp::parameter_pointers().
  std::vector<double> flatten() const;
  std::vector<double*> value_pointers();
};

/// Accumulates d(upstream . output)/d(params) into `grad` and returns the
/// gradient with respect to the input. Rejects traces taken from a different
/// parameter revision or layer shape.
std::vector<double> mlp_backward_into(const Mlp& net, const ForwardTrace& trace, std::span<const double> upstream,
                                      ParamGrad& grad);

struct Backward {
  ParamGrad params;
  std::vector<double> input;
};

Backward mlp_backward(const Mlp& net, const ForwardTrace& trace, std::span<const double> upstream);

/// While alive, folds every ReLU on/off decision made by mlp_forward on this
/// thread into a signature. Finite-difference probes use it to reject steps
/// that cross an activation kink.
class ReluPatternRecorder {
 public:
  ReluPatternRecorder();
  ~ReluPatternRecorder();
  ReluPatternRecorder(const ReluPatternRecorder&) = delete;
  ReluPatternRecorder& operator=(const ReluPatternRecorder&) = delete;

  std::uint64_t signature() const { return hash_; }
  std::size_t units() const { return units_; }
  void record(bool on);

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
  std::size_t units_ = 0;
  ReluPatternRecorder* previous_;
};

struct FiniteDifferenceOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Lower bound on the relative-error denominator max(|analytic|, |numeric|),
  /// multiplied by max(1, |loss|) at the probe point.
  double abs_floor = 1e-5;
  /// Number of randomly chosen coordinates to probe; 0 probes all of them.
  std::size_t probes = 0;
  std::uint64_t seed = 0;
};

struct FiniteDifferenceReport {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  bool passed = true;
};

/// Central differences of `eval` along each probed coordinate of `params`,
/// compared against `analytic`.
FiniteDifferenceReport finite_difference_check(std::span<double* const> params, std::span<const double> analytic,
                                               const std::function<double()>& eval,
                                               const FiniteDifferenceOptions& options);

/// Scalar loss over a network output; writes d(loss)/d(output) into `grad`.
using OutputLoss = std::function<double(std::span<const double> output, std::vector<double>& grad)>;

struct GradCheckReport {
  std::vector<double> layer_weight_error;
  std::vector<double> layer_bias_error;
  double max_relative_error = 0.0;
  std::size_t skipped_kinks = 0;
  bool passed = true;
};

/// Checks mlp_backward against central differences on every parameter.
/// `analytic_override`, when given, replaces the backprop gradient (used to
/// confirm the checker catches corrupted gradients).
GradCheckReport grad_check(const Mlp& net, std::span<const double> input, const OutputLoss& loss, double tolerance,
                           const ParamGrad* analytic_override = nullptr);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  ParamGrad first_moment;
  ParamGrad second_moment;

  static AdamState for_net(const Mlp& net, const AdamConfig& config);
};

/// Bias-corrected Adam update. Throws, before touching any parameter, if a
/// gradient is non-finite or shapes disagree; `name` labels the network in
/// the message.
void adam_step(Mlp& net, const ParamGrad& grad, AdamState& state, std::string_view name = "mlp");

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace snce
