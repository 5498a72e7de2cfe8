#pragma once

// Time-unrolled simulation, reverse-mode gradients through the unroll
// (surrogate spike derivative, trainable decays), losses and the optimizer.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dsnn/activity.hpp"
#include "dsnn/network.hpp"
#include "dsnn/tensor.hpp"

namespace dsnn {

struct LayerTrace {
  Matrix u;        // T x M membrane potentials
  Matrix theta;    // T x M spikes (soft values in soft mode)
  Matrix current;  // T x M input currents
};

struct Tape {
  Matrix input;  // T x C
  std::vector<LayerTrace> layers;
  LayerTrace readout;  // theta stays zero

  [[nodiscard]] std::size_t steps() const { return input.rows; }
  [[nodiscard]] const Matrix& readout_potentials() const { return readout.u; }
  friend bool operator==(const Tape&, const Tape&) = default;
};

inline bool operator==(const LayerTrace& a, const LayerTrace& b) {
  return a.u == b.u && a.theta == b.theta && a.current == b.current;
}

Tape forward(const NetworkSpec& spec, const NetworkParams& params, const Matrix& input);

/// Gradients of a scalar loss given dLoss/du_readout (T x R); masked weights get 0.
NetworkParams backward(const NetworkSpec& spec, const NetworkParams& params, const Tape& tape,
                       const Matrix& readout_grad);

struct LossResult {
  double loss = 0.0;
  Matrix grad;  // d loss / d readout potentials, T x R
};

/// (u_{T-1} - target)^2 on a single readout neuron.
LossResult loss_mse_readout(const Matrix& readout, double target);
/// Cross-entropy over per-class max-over-time readout potentials.
LossResult loss_classification(const Matrix& readout, int label);
/// argmax over classes of the max-over-time readout potential.
int predict_class(const Matrix& readout);

enum class LossKind { kMseFinal, kCrossEntropyMax };

struct Sample {
  Matrix input;
  double target = 0.0;
  int label = -1;
};
using Dataset = std::vector<Sample>;

struct Hyperparams {
  double learning_rate = 1e-2;
  double lr_decay = 1.0;  // multiplied into the step size after every epoch
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  LossKind loss = LossKind::kMseFinal;
  std::size_t workers = 1;  // 0 = hardware concurrency

  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss = 0.0;
  std::optional<double> accuracy;  // classification only
  std::vector<double> spikes_per_step;  // hidden layers
};

struct EvalResult {
  double loss = 0.0;
  std::optional<double> accuracy;
  ActivityTrace activity;
};

EvalResult evaluate(const NetworkSpec& spec, const NetworkParams& params, const Dataset& data,
                    LossKind loss, std::size_t workers = 1);

/// Called after each epoch; return false to stop early.
using EpochCallback = std::function<bool(const EpochMetrics&)>;

struct TrainResult {
  NetworkParams params;
  std::vector<EpochMetrics> history;
};

/// Continues training from `params`.
TrainResult fit(const NetworkSpec& spec, NetworkParams params, const Dataset& data,
                const Hyperparams& hp, const EpochCallback& on_epoch = {});
/// Initializes from hp.seed and trains.
TrainResult train(const NetworkSpec& spec, const Dataset& data, const Hyperparams& hp,
                  const EpochCallback& on_epoch = {});

/// Adaptive-moment optimizer over every tensor of a NetworkParams.
class Adam {
 public:
  explicit Adam(const NetworkParams& like, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);
  /// Updates params in place; re-applies masks and clamps decay parameters.
  void step(NetworkParams& params, const NetworkParams& grads);
  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, epsilon_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Mean gradient and mean loss over samples[indices], reduced in index order.
double batch_gradient(const NetworkSpec& spec, const NetworkParams& params, const Dataset& data,
                      std::span<const std::size_t> indices, LossKind loss, std::size_t workers,
                      NetworkParams& grads_out);

}  // namespace dsnn
