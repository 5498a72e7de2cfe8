#include "dsnn/layers.hpp"

#include <algorithm>
#include <string>

#include "dsnn/errors.hpp"

namespace dsnn {

void DelaySpec::validate() const {
  require(!delays.empty(), "DelaySpec: empty delay set");
  require(delays.front() >= 0, "DelaySpec: negative delay");
  for (std::size_t s = 1; s < delays.size(); ++s) {
    require(delays[s] > delays[s - 1], "DelaySpec: delays must be strictly increasing");
  }
}

DelaySpec DelaySpec::from_list(std::vector<int> delays) {
  DelaySpec spec;
  spec.delays = std::move(delays);
  spec.validate();
  return spec;
}

DelaySpec delay_spec_from_depth_stride(int depth, int stride) {
  require(stride >= 1, "delay window: stride must be >= 1");
  require(depth >= stride, "delay window: depth must be >= stride");
  require(depth % stride == 0, "delay window: depth " + std::to_string(depth) +
                                   " not divisible by stride " + std::to_string(stride));
  DelaySpec spec;
  spec.delays.clear();
  for (int d = 0; d < depth; d += stride) spec.delays.push_back(d);
  spec.depth = depth;
  spec.stride = stride;
  return spec;
}

DelayLayerParams::DelayLayerParams(std::size_t pre, std::size_t post, DelaySpec spec)
    : pre(pre), post(post), delay_spec(std::move(spec)) {
  delay_spec.validate();
  weights.assign(pre * post * slots(), 0.0);
  mask.assign(weights.size(), 1.0);
}

std::size_t DelayLayerParams::active_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1.0));
}

void DelayLayerParams::validate() const {
  delay_spec.validate();
  require(weights.size() == pre * post * slots(), "DelayLayerParams: weight shape mismatch");
  require(mask.size() == weights.size(), "DelayLayerParams: mask shape mismatch");
  for (std::size_t n = 0; n < mask.size(); ++n) {
    require(mask[n] == 0.0 || mask[n] == 1.0, "DelayLayerParams: mask entries must be 0 or 1");
    require(mask[n] == 1.0 || weights[n] == 0.0, "DelayLayerParams: masked weight is not zero");
  }
}

void DelayLayerParams::apply_mask() {
  for (std::size_t n = 0; n < weights.size(); ++n) {
    if (mask[n] == 0.0) weights[n] = 0.0;
  }
}

SpikeHistoryBuffer::SpikeHistoryBuffer(std::size_t width, std::size_t capacity)
    : width_(width), capacity_(capacity), ring_(width * capacity, 0.0), zeros_(width, 0.0) {
  require(capacity >= 1, "SpikeHistoryBuffer: capacity must be >= 1");
}

void SpikeHistoryBuffer::push(std::span<const double> theta) {
  require(theta.size() == width_, "push_spikes: vector length does not match buffer width");
  cursor_ = elapsed_ == 0 ? 0 : (cursor_ + 1) % capacity_;
  std::copy(theta.begin(), theta.end(), ring_.begin() + static_cast<std::ptrdiff_t>(cursor_ * width_));
  ++elapsed_;
}

std::span<const double> SpikeHistoryBuffer::lag(std::size_t lag) const {
  require(lag < capacity_, "SpikeHistoryBuffer: lag exceeds capacity");
  if (lag >= elapsed_) return zeros_;
  const std::size_t slot = (cursor_ + capacity_ - lag) % capacity_;
  return std::span<const double>(ring_).subspan(slot * width_, width_);
}

void SpikeHistoryBuffer::reset() {
  std::fill(ring_.begin(), ring_.end(), 0.0);
  cursor_ = 0;
  elapsed_ = 0;
}

void feedforward_input(const DenseWeights& weights, std::span<const double> theta_pre,
                       std::span<double> out) {
  require(theta_pre.size() == weights.pre && out.size() == weights.post &&
              weights.w.size() == weights.pre * weights.post,
          "feedforward_input: shape mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < weights.pre; ++i) {
    const double x = theta_pre[i];
    if (x == 0.0) continue;
    const double* row = weights.w.data() + i * weights.post;
    for (std::size_t j = 0; j < weights.post; ++j) out[j] += row[j] * x;
  }
}

std::vector<double> feedforward_input(const DenseWeights& weights,
                                      std::span<const double> theta_pre) {
  std::vector<double> out(weights.post);
  feedforward_input(weights, theta_pre, out);
  return out;
}

std::vector<double> recurrent_input(const RecurrentLayerParams& params,
                                    std::span<const double> theta_pre,
                                    std::span<const double> theta_self_prev) {
  const auto m = params.ff_weights.post;
  require(params.rec_weights.pre == m && params.rec_weights.post == m,
          "recurrent_input: recurrent weights must be M x M");
  auto out = feedforward_input(params.ff_weights, theta_pre);
  const auto lateral = feedforward_input(params.rec_weights, theta_self_prev);
  for (std::size_t j = 0; j < m; ++j) out[j] += lateral[j];
  return out;
}

void delayed_input(const DelayLayerParams& params, const SpikeHistoryBuffer& history,
                   std::span<double> out) {
  require(history.width() == params.pre && out.size() == params.post,
          "delayed_input: shape mismatch");
  require(history.capacity() >= static_cast<std::size_t>(params.delay_spec.max_delay()) + 1,
          "delayed_input: history capacity smaller than max delay + 1");
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t slots = params.slots();
  const std::size_t post = params.post;
  for (std::size_t s = 0; s < slots; ++s) {
    const auto theta = history.lag(static_cast<std::size_t>(params.delay_spec.delays[s]));
    for (std::size_t i = 0; i < params.pre; ++i) {
      const double x = theta[i];
      if (x == 0.0) continue;
      const double* w = params.weights.data() + i * post * slots + s;
      const double* m = params.mask.data() + i * post * slots + s;
      for (std::size_t j = 0; j < post; ++j) out[j] += w[j * slots] * m[j * slots] * x;
    }
  }
}

std::vector<double> delayed_input(const DelayLayerParams& params,
                                  const SpikeHistoryBuffer& history) {
  std::vector<double> out(params.post);
  delayed_input(params, history, out);
  return out;
}

}  // namespace dsnn
