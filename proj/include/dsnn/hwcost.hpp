#pragma once

// Deployment cost model for digital neuromorphic cores: parameter and state
// counting, delay-structure overheads (per-neuron ring buffers or per-layer
// delay queues), operation counting from activity traces and linear energy.

#include <optional>
#include <string>
#include <vector>

#include "dsnn/activity.hpp"
#include "dsnn/layers.hpp"
#include "dsnn/network.hpp"

namespace dsnn::hw {

enum class NeuronKind { kLif, kAlif };

struct ArchLayer {
  std::size_t size = 0;
  NeuronKind neuron = NeuronKind::kLif;
  bool recurrent = false;
  std::optional<DelaySpec> delays;  // on the fan-in projection
  // Unmasked fan-in synapses after pruning; defaults to pre * size * |D|.
  std::optional<std::size_t> active_synapses;
};

struct ArchSpec {
  std::string name;
  std::size_t input_size = 0;
  std::vector<ArchLayer> layers;
  ArchLayer readout;  // LIF integrator, never recurrent

  void validate() const;
  /// Hidden layers followed by the readout.
  [[nodiscard]] std::vector<ArchLayer> populations() const;
};

/// Architecture of a trained network; pruned masks become active_synapses.
ArchSpec arch_from_network(const NetworkSpec& spec, const NetworkParams* params = nullptr,
                           std::string name = "model");

struct ParamCount {
  std::size_t weights = 0;
  std::size_t time_constants = 0;
  std::size_t total = 0;
};

ParamCount param_count(const ArchSpec& arch);
/// One word per membrane plus one per ALIF adaptation variable.
std::size_t state_count(const ArchSpec& arch);

struct RingBufferOverhead {
  std::size_t words = 0;
  std::size_t extra_accumulations_per_step = 0;
};
RingBufferOverhead ring_buffer_overhead(const ArchSpec& arch);

struct DelayQueueOverhead {
  std::size_t words = 0;
  double pushes = 0.0;  // per inference
  double pops = 0.0;
};
DelayQueueOverhead delay_queue_overhead(const ArchSpec& arch, const ActivityTrace& activity);

enum class DelayMechanism { kNone, kRingBuffer, kDelayQueue };
std::string to_string(DelayMechanism m);
DelayMechanism mechanism_from_string(const std::string& s);

// Per-inference operation counts.
struct OpCounts {
  double synaptic_accumulations = 0.0;
  double weight_reads = 0.0;
  double neuron_updates = 0.0;  // decay-and-integrate, one per neuron per step
  double state_reads = 0.0;
  double state_writes = 0.0;
  double compares = 0.0;
  double spike_packet_reads = 0.0;
  double spike_packet_writes = 0.0;
  double ring_accumulations = 0.0;
  double queue_pushes = 0.0;
  double queue_pops = 0.0;
};

OpCounts op_counts(const ArchSpec& arch, const ActivityTrace& activity, std::size_t steps,
                   DelayMechanism mechanism = DelayMechanism::kNone);

struct EnergyCoeffs {
  double weight_read = 0.0;
  double state_read = 0.0;
  double state_write = 0.0;
  double spike_packet_read = 0.0;
  double spike_packet_write = 0.0;
  double accumulate = 0.0;
  double compare = 0.0;
  double queue_push = 0.0;
  double queue_pop = 0.0;

  void validate() const;
};

/// Joules for all counts.
double energy(const OpCounts& counts, const EnergyCoeffs& coeffs);
/// Joules for the delay-structure counts only (ring accumulations, queue traffic).
double overhead_energy(const OpCounts& counts, const EnergyCoeffs& coeffs);

struct CostReport {
  std::string name;
  DelayMechanism mechanism = DelayMechanism::kNone;
  std::size_t steps = 0;
  ParamCount params;
  std::size_t state_words = 0;
  std::size_t delay_words = 0;
  std::size_t memory_words = 0;  // params + states + delay structure
  OpCounts counts;
  double neurosynaptic_energy = 0.0;
  double overhead_energy = 0.0;
  double total_energy = 0.0;
};

CostReport cost_report(const ArchSpec& arch, const ActivityTrace& activity,
                       const EnergyCoeffs& coeffs, DelayMechanism mechanism);

struct SavingFactors {
  double energy = 1.0;
  double memory = 1.0;
};

/// baseline / model ratios of total energy and memory words.
SavingFactors saving_factors(const CostReport& baseline, const CostReport& model);

}  // namespace dsnn::hw
