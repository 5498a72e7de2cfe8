#pragma once

// Network description and the trainable parameter set derived from it.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsnn/layers.hpp"
#include "dsnn/neuron.hpp"

namespace dsnn {

enum class LayerKind { kFeedforward, kRecurrent, kDelayed };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& s);

struct LayerSpec {
  std::size_t size = 0;
  LayerKind kind = LayerKind::kFeedforward;
  DelaySpec delays;  // used only when kind == kDelayed
  NeuronConfig neuron;
  double weight_gain = 1.0;  // multiplies the default init range
};

// Non-spiking integrator ("infinite threshold"); optional delays on its fan-in.
struct ReadoutSpec {
  std::size_t size = 1;
  std::optional<DelaySpec> delays;
  double tau_init = 20.0;
  double weight_gain = 1.0;
};

struct NetworkSpec {
  std::size_t input_size = 0;
  std::vector<LayerSpec> layers;
  ReadoutSpec readout;
  SurrogateConfig surrogate;

  void validate() const;
  /// Delay set of the projection feeding hidden layer `l` ({0} unless delayed).
  [[nodiscard]] DelaySpec input_delays(std::size_t l) const;
  [[nodiscard]] DelaySpec readout_delays() const;
};

struct LayerParams {
  DelayLayerParams input;                 // projection from the previous layer
  std::optional<DenseWeights> recurrent;  // lateral M x M
  std::vector<double> decay_param;        // alpha = sigmoid(decay_param)

  [[nodiscard]] std::vector<double> alpha() const;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct NetworkParams {
  std::vector<LayerParams> layers;
  LayerParams readout;

  /// Same shapes, all values zero (masks copied).
  [[nodiscard]] NetworkParams zeros_like() const;
  /// Unmasked weights + recurrent weights + one time constant per neuron.
  [[nodiscard]] std::size_t effective_param_count() const;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

/// Visits every trainable tensor in a fixed order; `mask` is null for unmasked tensors.
void for_each_tensor(NetworkParams& params,
                     const std::function<void(std::span<double>, const std::vector<double>*)>& fn);
void for_each_tensor(const NetworkParams& params,
                     const std::function<void(std::span<const double>, const std::vector<double>*)>& fn);

/// Uniform weights in [-k, k], k = gain / sqrt(fan_in * |D|); decay from tau_init.
NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed);

/// Throws ContractViolation when params do not have the shapes implied by spec.
void check_params(const NetworkSpec& spec, const NetworkParams& params);

}  // namespace dsnn
