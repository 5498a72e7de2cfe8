#pragma once

// Magnitude selection of delay synapses, delay-grid refinement around the
// survivors, and the prune / refine / fine-tune loop.

#include <optional>
#include <vector>

#include "dsnn/network.hpp"
#include "dsnn/training.hpp"

namespace dsnn {

struct PruneConfig {
  // Exactly one of the two selection modes is set.
  std::optional<std::size_t> cap_per_pair;  // keep K slots per (pre, post) pair
  std::optional<double> keep_fraction;      // keep this share of the layer's slots
  std::size_t refine_rounds = 1;
  std::size_t finetune_epochs = 5;
  std::optional<int> refine_stride;  // finer delay grid introduced after pruning

  void validate() const;
};

/// New mask keeping the largest-|w| active slots; ties go to the smaller delay.
std::vector<double> prune_by_magnitude(const DelayLayerParams& params, const PruneConfig& config);

/// Adds zero-weight slots at d +- j*new_stride (|offset| < old stride) around every
/// surviving slot; survivors keep their weights and pruned slots stay masked.
DelayLayerParams refine_delays(const DelayLayerParams& params, int new_stride);

struct RoundReport {
  std::size_t round = 0;
  std::size_t params = 0;  // effective trainable parameters
  double loss = 0.0;
  std::optional<double> accuracy;
  std::vector<double> spikes_per_step;
};

struct PruneResult {
  NetworkSpec spec;  // delay sets updated after refinement
  NetworkParams params;
  std::vector<RoundReport> rounds;
};

PruneResult prune_finetune_loop(const NetworkSpec& spec, const NetworkParams& params,
                                const Dataset& data, const PruneConfig& config,
                                const Hyperparams& hp);

}  // namespace dsnn
