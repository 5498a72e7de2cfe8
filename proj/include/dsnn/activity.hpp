#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dsnn {

// Spike statistics of one population over an inference of `steps` timesteps.
struct LayerActivity {
  std::string name;
  double avg_per_step = 0.0;
  double max_per_step = 0.0;
  double total = 0.0;  // spikes per inference
};

// Entry 0 is the input population, then hidden layers in order.
struct ActivityTrace {
  std::size_t steps = 0;
  std::vector<LayerActivity> layers;

  void validate() const;
};

}  // namespace dsnn
