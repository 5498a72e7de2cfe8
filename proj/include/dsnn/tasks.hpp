#pragma once

// Benchmark data: the Adding task, spike-event ingestion and binning, and a
// small gap-discrimination task whose classes differ only in spike timing.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dsnn/tensor.hpp"
#include "dsnn/training.hpp"

namespace dsnn::tasks {

struct AddingSample {
  std::vector<double> values;  // uniform in [0, 1]
  std::vector<int> markers;    // exactly two ones, one per half
  double target = 0.0;
};

std::vector<AddingSample> gen_adding(std::size_t steps, std::size_t count, std::uint64_t seed);

/// T x 2 currents: channel 0 values, channel 1 markers.
Matrix encode_adding(const AddingSample& sample);

struct SpikeEvent {
  double time = 0.0;  // bin index or seconds, in [0, duration)
  std::size_t channel = 0;
};

struct SpikeEventSet {
  std::vector<SpikeEvent> events;
  std::size_t num_channels = 1;
  double duration = 1.0;
  int label = -1;

  void validate() const;
};

/// raster(t, c) = 1 iff at least one event of channel c falls in bin t.
Matrix bin_events(const SpikeEventSet& events, std::size_t bins);

struct DelayXorConfig {
  std::size_t steps = 64;
  std::vector<int> gaps{5, 20};  // one class per gap
  std::size_t count = 100;
  std::uint64_t seed = 1;
  int jitter = 1;  // gap perturbed uniformly in [-jitter, jitter]
  std::size_t channels = 1;
};

/// Two spikes on one channel separated by the class gap; labels balanced round-robin.
std::vector<SpikeEventSet> gen_delay_xor(const DelayXorConfig& cfg);

Dataset to_dataset(const std::vector<AddingSample>& samples);
Dataset to_dataset(const std::vector<SpikeEventSet>& sets, std::size_t bins);

// File formats. Event CSV: "# label=<int>" on line 1, optional "# key=value"
// comments, header "time_bin,channel", one integer event per line. Adding CSV:
// "# target=<real>" comment, header "value,marker", one timestep per line.
void write_event_csv(const std::filesystem::path& path, const SpikeEventSet& set,
                     std::uint64_t seed);
SpikeEventSet read_event_csv(const std::filesystem::path& path);
void write_adding_csv(const std::filesystem::path& path, const AddingSample& sample,
                      std::uint64_t seed);
AddingSample read_adding_csv(const std::filesystem::path& path);

/// Sorted *.csv files of a dataset directory.
std::vector<std::filesystem::path> list_samples(const std::filesystem::path& dir);

}  // namespace dsnn::tasks
