#include "dsnn/hwcost.hpp"

#include <algorithm>
#include <cmath>

#include "dsnn/errors.hpp"

namespace dsnn {

void ActivityTrace::validate() const {
  for (const auto& l : layers) {
    if (!(l.avg_per_step >= 0.0 && l.max_per_step >= l.avg_per_step && l.total >= 0.0)) {
      throw DataError("activity trace: population '" + l.name +
                      "' violates max >= avg >= 0 or has a negative total");
    }
  }
}

}  // namespace dsnn

namespace dsnn::hw {

namespace {

std::size_t slot_count(const ArchLayer& l) { return l.delays ? l.delays->count() : 1; }

// Delay structures are only needed when some slot actually delays.
bool has_delay(const ArchLayer& l) { return l.delays && l.delays->max_delay() > 0; }

std::size_t nonzero_delays(const ArchLayer& l) {
  if (!l.delays) return 0;
  return static_cast<std::size_t>(
      std::count_if(l.delays->delays.begin(), l.delays->delays.end(), [](int d) { return d > 0; }));
}

std::size_t fan_in_synapses(const ArchLayer& l, std::size_t pre) {
  return l.active_synapses.value_or(pre * l.size * slot_count(l));
}

const LayerActivity& activity_of(const ActivityTrace& activity, std::size_t population) {
  if (population >= activity.layers.size()) {
    throw DataError("activity trace has no entry for population " + std::to_string(population) +
                    " (entry 0 is the input)");
  }
  return activity.layers[population];
}

}  // namespace

void ArchSpec::validate() const {
  require(input_size >= 1, "arch: input_size must be >= 1");
  require(!layers.empty(), "arch: at least one hidden layer required");
  require(readout.size >= 1, "arch: readout size must be >= 1");
  require(!readout.recurrent && readout.neuron == NeuronKind::kLif,
          "arch: readout is a non-recurrent LIF integrator");
  require(!(layers.front().delays && layers.front().delays->count() > 1),
          "arch: the first hidden layer takes no input delays");
  for (const auto& l : layers) {
    require(l.size >= 1, "arch: empty layer");
    if (l.delays) l.delays->validate();
  }
  if (readout.delays) readout.delays->validate();
}

std::vector<ArchLayer> ArchSpec::populations() const {
  auto all = layers;
  all.push_back(readout);
  return all;
}

ArchSpec arch_from_network(const NetworkSpec& spec, const NetworkParams* params, std::string name) {
  spec.validate();
  ArchSpec arch;
  arch.name = std::move(name);
  arch.input_size = spec.input_size;
  auto fill = [](ArchLayer& al, const DelaySpec& d, const LayerParams* lp) {
    if (lp != nullptr) {
      if (lp->input.slots() > 1 || lp->input.delay_spec.max_delay() > 0) al.delays = lp->input.delay_spec;
      if (lp->input.active_count() != lp->input.weights.size()) al.active_synapses = lp->input.active_count();
    } else if (d.count() > 1 || d.max_delay() > 0) {
      al.delays = d;
    }
  };
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    ArchLayer al;
    al.size = spec.layers[l].size;
    al.recurrent = spec.layers[l].kind == LayerKind::kRecurrent;
    fill(al, spec.input_delays(l), params ? &params->layers[l] : nullptr);
    arch.layers.push_back(al);
  }
  arch.readout.size = spec.readout.size;
  fill(arch.readout, spec.readout_delays(), params ? &params->readout : nullptr);
  return arch;
}

ParamCount param_count(const ArchSpec& arch) {
  arch.validate();
  ParamCount pc;
  std::size_t pre = arch.input_size;
  for (const auto& l : arch.populations()) {
    pc.weights += fan_in_synapses(l, pre);
    if (l.recurrent) pc.weights += l.size * l.size;
    pc.time_constants += l.size * (l.neuron == NeuronKind::kAlif ? 2 : 1);
    pre = l.size;
  }
  pc.total = pc.weights + pc.time_constants;
  return pc;
}

std::size_t state_count(const ArchSpec& arch) {
  arch.validate();
  std::size_t n = 0;
  for (const auto& l : arch.populations()) n += l.size * (l.neuron == NeuronKind::kAlif ? 2 : 1);
  return n;
}

RingBufferOverhead ring_buffer_overhead(const ArchSpec& arch) {
  arch.validate();
  RingBufferOverhead o;
  for (const auto& l : arch.populations()) {
    if (!has_delay(l)) continue;
    o.words += l.size * static_cast<std::size_t>(l.delays->max_delay());
    o.extra_accumulations_per_step += l.size;
  }
  return o;
}

DelayQueueOverhead delay_queue_overhead(const ArchSpec& arch, const ActivityTrace& activity) {
  arch.validate();
  DelayQueueOverhead o;
  const auto pops = arch.populations();
  for (std::size_t p = 0; p < pops.size(); ++p) {
    const auto& l = pops[p];
    if (!has_delay(l)) continue;
    const auto& src = activity_of(activity, p);  // population p-1 in hidden numbering; 0 = input
    const auto peak = static_cast<std::size_t>(std::ceil(src.max_per_step));
    o.words += peak * static_cast<std::size_t>(l.delays->max_delay());
    const double hops = static_cast<double>(nonzero_delays(l));
    o.pushes += src.total * hops;
    o.pops += src.total * hops;
  }
  return o;
}

std::string to_string(DelayMechanism m) {
  switch (m) {
    case DelayMechanism::kNone: return "none";
    case DelayMechanism::kRingBuffer: return "ring";
    case DelayMechanism::kDelayQueue: return "queue";
  }
  return "none";
}

DelayMechanism mechanism_from_string(const std::string& s) {
  if (s == "none") return DelayMechanism::kNone;
  if (s == "ring") return DelayMechanism::kRingBuffer;
  if (s == "queue") return DelayMechanism::kDelayQueue;
  throw ConfigError("unknown delay mechanism '" + s + "' (expected ring, queue or none)");
}

OpCounts op_counts(const ArchSpec& arch, const ActivityTrace& activity, std::size_t steps,
                   DelayMechanism mechanism) {
  arch.validate();
  OpCounts c;
  const auto pops = arch.populations();
  const double t = static_cast<double>(steps);
  std::size_t pre = arch.input_size;
  for (std::size_t p = 0; p < pops.size(); ++p) {
    const auto& l = pops[p];
    const double in_spikes = activity_of(activity, p).total;
    const double fan_out = static_cast<double>(fan_in_synapses(l, pre)) / static_cast<double>(pre);
    c.synaptic_accumulations += in_spikes * fan_out;
    c.spike_packet_reads += in_spikes;
    const bool is_readout = p + 1 == pops.size();
    if (!is_readout) {
      const double own = activity_of(activity, p + 1).total;
      c.spike_packet_writes += own;
      if (l.recurrent) {
        c.synaptic_accumulations += own * static_cast<double>(l.size);
        c.spike_packet_reads += own;
      }
      c.compares += static_cast<double>(l.size) * t;
    }
    const double words = static_cast<double>(l.size * (l.neuron == NeuronKind::kAlif ? 2 : 1));
    c.neuron_updates += static_cast<double>(l.size) * t;
    c.state_reads += words * t;
    c.state_writes += words * t;
    if (has_delay(l)) {
      if (mechanism == DelayMechanism::kRingBuffer) {
        c.ring_accumulations += static_cast<double>(l.size) * t;
      } else if (mechanism == DelayMechanism::kDelayQueue) {
        const double hops = static_cast<double>(nonzero_delays(l));
        c.queue_pushes += in_spikes * hops;
        c.queue_pops += in_spikes * hops;
      }
    }
    pre = l.size;
  }
  c.weight_reads = c.synaptic_accumulations;
  return c;
}

void EnergyCoeffs::validate() const {
  for (double v : {weight_read, state_read, state_write, spike_packet_read, spike_packet_write,
                   accumulate, compare, queue_push, queue_pop}) {
    if (!(v >= 0.0 && std::isfinite(v))) throw ConfigError("energy coefficients must be finite and >= 0");
  }
}

double overhead_energy(const OpCounts& c, const EnergyCoeffs& e) {
  return c.ring_accumulations * e.accumulate + c.queue_pushes * e.queue_push +
         c.queue_pops * e.queue_pop;
}

namespace {

double neurosynaptic_energy(const OpCounts& c, const EnergyCoeffs& e) {
  return c.synaptic_accumulations * e.accumulate + c.weight_reads * e.weight_read +
         c.neuron_updates * e.accumulate + c.state_reads * e.state_read +
         c.state_writes * e.state_write + c.compares * e.compare +
         c.spike_packet_reads * e.spike_packet_read + c.spike_packet_writes * e.spike_packet_write;
}

}  // namespace

double energy(const OpCounts& c, const EnergyCoeffs& e) {
  return neurosynaptic_energy(c, e) + overhead_energy(c, e);
}

CostReport cost_report(const ArchSpec& arch, const ActivityTrace& activity,
                       const EnergyCoeffs& coeffs, DelayMechanism mechanism) {
  arch.validate();
  activity.validate();
  coeffs.validate();
  require(activity.steps >= 1, "cost: activity trace needs steps >= 1");
  CostReport r;
  r.name = arch.name;
  r.mechanism = mechanism;
  r.steps = activity.steps;
  r.params = param_count(arch);
  r.state_words = state_count(arch);
  if (mechanism == DelayMechanism::kRingBuffer) {
    r.delay_words = ring_buffer_overhead(arch).words;
  } else if (mechanism == DelayMechanism::kDelayQueue) {
    r.delay_words = delay_queue_overhead(arch, activity).words;
  }
  r.memory_words = r.params.total + r.state_words + r.delay_words;
  r.counts = op_counts(arch, activity, activity.steps, mechanism);
  r.overhead_energy = overhead_energy(r.counts, coeffs);
  r.neurosynaptic_energy = neurosynaptic_energy(r.counts, coeffs);
  r.total_energy = r.neurosynaptic_energy + r.overhead_energy;
  return r;
}

SavingFactors saving_factors(const CostReport& baseline, const CostReport& model) {
  if (model.total_energy == 0.0 || model.memory_words == 0) {
    throw ContractViolation("saving_factors: model cost is zero");
  }
  return {baseline.total_energy / model.total_energy,
          static_cast<double>(baseline.memory_words) / static_cast<double>(model.memory_words)};
}

}  // namespace dsnn::hw
