#pragma once

// Synaptic projections: plain feedforward, laterally recurrent and
// multi-delay (axonal) synapses fed from a spike-history ring.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dsnn {

struct DelaySpec {
  std::vector<int> delays{0};  // strictly increasing, >= 0
  // Set when generated from a receptive-field window.
  std::optional<int> depth;
  std::optional<int> stride;

  [[nodiscard]] std::size_t count() const { return delays.size(); }
  [[nodiscard]] int max_delay() const { return delays.back(); }
  [[nodiscard]] int min_delay() const { return delays.front(); }
  void validate() const;

  static DelaySpec from_list(std::vector<int> delays);
  friend bool operator==(const DelaySpec&, const DelaySpec&) = default;
};

/// Delays {0, stride, ..., depth - stride}.
DelaySpec delay_spec_from_depth_stride(int depth, int stride);

/// Weights indexed (pre, post, slot), stored row-major in that order.
struct DelayLayerParams {
  std::size_t pre = 0;
  std::size_t post = 0;
  DelaySpec delay_spec;
  std::vector<double> weights;
  std::vector<double> mask;

  DelayLayerParams() = default;
  DelayLayerParams(std::size_t pre, std::size_t post, DelaySpec spec);

  [[nodiscard]] std::size_t slots() const { return delay_spec.count(); }
  [[nodiscard]] std::size_t index(std::size_t i, std::size_t j, std::size_t s) const {
    return (i * post + j) * slots() + s;
  }
  [[nodiscard]] std::size_t active_count() const;
  void validate() const;
  /// Zeroes every weight whose mask entry is 0.
  void apply_mask();

  friend bool operator==(const DelayLayerParams&, const DelayLayerParams&) = default;
};

/// Dense weights stored pre-major: w[i * post + j].
struct DenseWeights {
  std::size_t pre = 0;
  std::size_t post = 0;
  std::vector<double> w;

  DenseWeights() = default;
  DenseWeights(std::size_t pre, std::size_t post) : pre(pre), post(post), w(pre * post, 0.0) {}
  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return w[i * post + j]; }
  double& at(std::size_t i, std::size_t j) { return w[i * post + j]; }

  friend bool operator==(const DenseWeights&, const DenseWeights&) = default;
};

struct RecurrentLayerParams {
  DenseWeights ff_weights;   // N x M
  DenseWeights rec_weights;  // M x M, presynaptic index first
};

/// Ring of the last `capacity` presynaptic spike vectors.
class SpikeHistoryBuffer {
 public:
  SpikeHistoryBuffer(std::size_t width, std::size_t capacity);

  void push(std::span<const double> theta);
  /// Spike vector from `lag` steps ago; all zeros before the first push.
  [[nodiscard]] std::span<const double> lag(std::size_t lag) const;
  void reset();

  [[nodiscard]] std::size_t width() const { return width_; }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] std::size_t elapsed() const { return elapsed_; }

 private:
  std::size_t width_;
  std::size_t capacity_;
  std::size_t cursor_ = 0;  // slot holding the most recent push
  std::size_t elapsed_ = 0;
  std::vector<double> ring_;
  std::vector<double> zeros_;
};

/// I_j = sum_i w_ij theta_i.
void feedforward_input(const DenseWeights& weights, std::span<const double> theta_pre,
                       std::span<double> out);
std::vector<double> feedforward_input(const DenseWeights& weights,
                                      std::span<const double> theta_pre);

/// I = ff_weights . theta_pre + rec_weights . theta_self_prev.
std::vector<double> recurrent_input(const RecurrentLayerParams& params,
                                    std::span<const double> theta_pre,
                                    std::span<const double> theta_self_prev);

/// I_j = sum_{d in D} sum_i w_ijd * mask_ijd * theta_i(k - d), with lag 0 = newest push.
void delayed_input(const DelayLayerParams& params, const SpikeHistoryBuffer& history,
                   std::span<double> out);
std::vector<double> delayed_input(const DelayLayerParams& params,
                                  const SpikeHistoryBuffer& history);

inline void push_spikes(SpikeHistoryBuffer& history, std::span<const double> theta) {
  history.push(theta);
}

}  // namespace dsnn
