#pragma once
// Shared generators and brute-force oracles for the test binaries.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "dsnn/hwcost.hpp"
#include "dsnn/layers.hpp"
#include "dsnn/network.hpp"
#include "dsnn/training.hpp"

namespace dsnn::testing {

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
  }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
  }
  bool coin(double p = 0.5) { return uniform() < p; }
};

inline DelaySpec random_delays(Rng& rng, int max_delay = 12, std::size_t max_count = 5) {
  std::vector<int> pool(static_cast<std::size_t>(max_delay) + 1);
  for (int d = 0; d <= max_delay; ++d) pool[static_cast<std::size_t>(d)] = d;
  std::shuffle(pool.begin(), pool.end(), rng.gen);
  pool.resize(rng.index(1, max_count));
  std::sort(pool.begin(), pool.end());
  return DelaySpec::from_list(pool);
}

inline DelayLayerParams random_projection(Rng& rng, std::size_t pre, std::size_t post,
                                          const DelaySpec& spec, double mask_drop = 0.0) {
  DelayLayerParams p(pre, post, spec);
  for (std::size_t n = 0; n < p.weights.size(); ++n) {
    p.weights[n] = rng.uniform(-1.0, 1.0);
    if (rng.coin(mask_drop)) p.mask[n] = 0.0;
  }
  p.apply_mask();
  return p;
}

inline std::vector<std::vector<double>> random_raster(Rng& rng, std::size_t steps, std::size_t width,
                                                      double rate) {
  std::vector<std::vector<double>> r(steps, std::vector<double>(width, 0.0));
  for (auto& row : r)
    for (auto& v : row) v = rng.coin(rate) ? 1.0 : 0.0;
  return r;
}

// I_j(k) = sum_d sum_i w_ijd mask_ijd theta_i(k - d), straight from the full history.
inline std::vector<double> naive_delayed_input(const DelayLayerParams& p,
                                               const std::vector<std::vector<double>>& history,
                                               std::size_t k) {
  std::vector<double> out(p.post, 0.0);
  for (std::size_t s = 0; s < p.slots(); ++s) {
    const int d = p.delay_spec.delays[s];
    if (static_cast<int>(k) - d < 0) continue;
    const auto& theta = history[k - static_cast<std::size_t>(d)];
    for (std::size_t i = 0; i < p.pre; ++i)
      for (std::size_t j = 0; j < p.post; ++j)
        out[j] += p.weights[p.index(i, j, s)] * p.mask[p.index(i, j, s)] * theta[i];
  }
  return out;
}

// Small random network: first layer feedforward or recurrent, later ones any kind.
inline NetworkSpec random_network(Rng& rng, std::size_t max_layers = 2, std::size_t max_width = 6) {
  NetworkSpec spec;
  spec.input_size = rng.index(1, 4);
  const std::size_t layers = rng.index(1, max_layers);
  for (std::size_t l = 0; l < layers; ++l) {
    LayerSpec ls;
    ls.size = rng.index(1, max_width);
    const std::size_t kind = rng.index(0, l == 0 ? 1 : 2);
    ls.kind = kind == 0 ? LayerKind::kFeedforward : kind == 1 ? LayerKind::kRecurrent : LayerKind::kDelayed;
    if (ls.kind == LayerKind::kDelayed) ls.delays = random_delays(rng, 6, 4);
    ls.neuron.tau_init = rng.uniform(1.5, 8.0);
    ls.neuron.u_th = rng.uniform(0.5, 1.5);
    ls.weight_gain = rng.uniform(1.0, 3.0);
    spec.layers.push_back(ls);
  }
  spec.readout.size = rng.index(1, 3);
  spec.readout.tau_init = rng.uniform(2.0, 20.0);
  if (rng.coin()) spec.readout.delays = random_delays(rng, 6, 3);
  return spec;
}

inline Matrix random_input(Rng& rng, std::size_t steps, std::size_t channels, bool spikes) {
  Matrix m(steps, channels);
  for (auto& v : m.data) v = spikes ? (rng.coin(0.3) ? 1.0 : 0.0) : rng.uniform(0.0, 1.5);
  return m;
}

// Uniform-across-sources masks are required for the event oracle to equal
// the aggregate counter, so pruning here keeps K slots for every pair.
inline std::vector<double> cap_mask(Rng& rng, const DelayLayerParams& p, std::size_t k) {
  std::vector<double> mask(p.weights.size(), 0.0);
  std::vector<std::size_t> slots(p.slots());
  for (std::size_t i = 0; i < p.pre; ++i)
    for (std::size_t j = 0; j < p.post; ++j) {
      for (std::size_t s = 0; s < slots.size(); ++s) slots[s] = s;
      std::shuffle(slots.begin(), slots.end(), rng.gen);
      for (std::size_t n = 0; n < k; ++n) mask[p.index(i, j, slots[n])] = 1.0;
    }
  return mask;
}

}  // namespace dsnn::testing
