#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fetchrl/common.hpp"
#include "fetchrl/scene.hpp"

namespace fetchrl {

struct ConvLayerSpec {
  int out_channels = 16;
  int kernel = 3;
  int stride = 1;
  bool operator==(const ConvLayerSpec&) const = default;
};

/// Architecture of the actor-critic network: a valid-padding ReLU conv stack
/// over the feature planes, flattened and concatenated with the context
/// vector, one shared ReLU hidden layer, then a linear policy head (softmax
/// over actions) and a linear value head.
struct NetworkSpec {
  int input_channels = 14;
  int window = 11;
  std::vector<ConvLayerSpec> conv_layers = {{16, 3, 1}, {32, 3, 1}};
  int hidden_units = 128;
  int context_units = kNumClasses;
  int action_count = kActionCount;

  // Throws ShapeMismatch when the layers do not chain.
  void validate() const;
  // Spatial size after each conv layer (front() is the input window).
  std::vector<int> spatial_sizes() const;
  int flat_features() const;
  std::size_t parameter_count() const;

  bool operator==(const NetworkSpec&) const = default;
};

/// Offsets of each layer's weights and biases in the flat parameter vector.
struct LayerSlice {
  std::size_t weight = 0;
  std::size_t weight_size = 0;
  std::size_t bias = 0;
  std::size_t bias_size = 0;
};

struct ParamLayout {
  std::vector<LayerSlice> conv;
  LayerSlice hidden;
  LayerSlice policy;
  LayerSlice value;
  std::size_t total = 0;

  static ParamLayout of(const NetworkSpec& spec);
};

class PolicyParams {
 public:
  PolicyParams() = default;
  explicit PolicyParams(NetworkSpec spec);  // all zeros

  const NetworkSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return layout_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::size_t size() const { return values_.size(); }

  bool operator==(const PolicyParams& o) const {
    return spec_ == o.spec_ && values_ == o.values_;
  }

 private:
  NetworkSpec spec_;
  ParamLayout layout_;
  std::vector<double> values_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
PolicyParams init_params(const NetworkSpec& spec, std::uint64_t seed);

struct PolicyOutput {
  std::array<double, kActionCount> probs{};
  std::array<double, kActionCount> logits{};
  double value = 0.0;
  double entropy = 0.0;
};

/// Activations kept for the backward pass. Reused across calls to avoid
/// reallocation in the training loop.
struct ForwardCache {
  std::vector<std::vector<double>> conv_out;  // post-ReLU, per conv layer
  std::vector<double> joint;                  // flatten ++ context
  std::vector<double> hidden;                 // post-ReLU
  PolicyOutput output;
};

PolicyOutput forward(const PolicyParams& params, std::span<const double> features,
                     std::span<const double> context);
const PolicyOutput& forward(const PolicyParams& params,
                            std::span<const double> features,
                            std::span<const double> context, ForwardCache& cache);

struct SampledAction {
  int action = 0;
  double log_prob = 0.0;
};

/// Inverse-CDF sample over actions in their fixed order.
SampledAction sample_action(const PolicyOutput& output, Rng& rng);
/// Highest-probability action, lowest index on ties.
SampledAction greedy_action(const PolicyOutput& output);

struct LossSpec {
  double clip_epsilon = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
};

struct TrainingSample {
  std::span<const double> features;
  std::span<const double> context;
  int action = 0;
  double old_log_prob = 0.0;
  double advantage = 0.0;
  double return_target = 0.0;
};

struct LossStats {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;  // mean squared error, before value_coef
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

struct BackwardResult {
  std::vector<double> gradient;
  LossStats stats;
};

/// Loss and its exact gradient w.r.t. every parameter, averaged over the
/// minibatch. Throws NumericalError naming the layer on a non-finite value.
BackwardResult backward(const PolicyParams& params,
                        std::span<const TrainingSample> minibatch,
                        const LossSpec& loss);

/// Loss only (same definition as `backward`), for finite-difference checks.
LossStats evaluate_loss(const PolicyParams& params,
                        std::span<const TrainingSample> minibatch,
                        const LossSpec& loss);

}  // namespace fetchrl
