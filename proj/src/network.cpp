#include "dsnn/network.hpp"

#include <cmath>
#include <random>

#include "dsnn/errors.hpp"

namespace dsnn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kFeedforward: return "feedforward";
    case LayerKind::kRecurrent: return "recurrent";
    case LayerKind::kDelayed: return "delayed";
  }
  return "feedforward";
}

LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "feedforward") return LayerKind::kFeedforward;
  if (s == "recurrent") return LayerKind::kRecurrent;
  if (s == "delayed") return LayerKind::kDelayed;
  throw ConfigError("unknown layer kind '" + s + "'");
}

void NetworkSpec::validate() const {
  require(input_size >= 1, "network: input_size must be >= 1");
  require(!layers.empty(), "network: at least one hidden layer required");
  require(readout.size >= 1, "network: readout size must be >= 1");
  require(surrogate.beta > 0.0, "network: surrogate beta must be positive");
  require(layers.front().kind != LayerKind::kDelayed,
          "network: the first hidden layer takes no input delays");
  for (const auto& layer : layers) {
    require(layer.size >= 1, "network: empty hidden layer");
    require(layer.neuron.u_th > 0.0, "network: u_th must be positive");
    require(layer.neuron.tau_init > 0.0, "network: tau_init must be positive");
    if (layer.kind == LayerKind::kDelayed) layer.delays.validate();
  }
  if (readout.delays) readout.delays->validate();
}

DelaySpec NetworkSpec::input_delays(std::size_t l) const {
  return layers.at(l).kind == LayerKind::kDelayed ? layers[l].delays : DelaySpec{};
}

DelaySpec NetworkSpec::readout_delays() const { return readout.delays.value_or(DelaySpec{}); }

std::vector<double> LayerParams::alpha() const {
  std::vector<double> a(decay_param.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = decay_from_param(decay_param[i]);
  return a;
}

NetworkParams NetworkParams::zeros_like() const {
  NetworkParams z = *this;
  for_each_tensor(z, [](std::span<double> t, const std::vector<double>*) {
    std::fill(t.begin(), t.end(), 0.0);
  });
  return z;
}

std::size_t NetworkParams::effective_param_count() const {
  std::size_t n = 0;
  auto count_layer = [&n](const LayerParams& lp) {
    n += lp.input.active_count();
    if (lp.recurrent) n += lp.recurrent->w.size();
    n += lp.decay_param.size();
  };
  for (const auto& lp : layers) count_layer(lp);
  count_layer(readout);
  return n;
}

namespace {

template <typename Params, typename Fn>
void visit_tensors(Params& params, Fn&& fn) {
  auto visit_layer = [&fn](auto& lp) {
    fn(std::span(lp.input.weights), &lp.input.mask);
    if (lp.recurrent) fn(std::span(lp.recurrent->w), nullptr);
    fn(std::span(lp.decay_param), nullptr);
  };
  for (auto& lp : params.layers) visit_layer(lp);
  visit_layer(params.readout);
}

LayerParams make_layer(std::size_t pre, std::size_t post, const DelaySpec& delays,
                       bool recurrent, double tau_init, double gain, std::mt19937_64& rng) {
  LayerParams lp;
  lp.input = DelayLayerParams(pre, post, delays);
  const double k = gain / std::sqrt(static_cast<double>(pre * delays.count()));
  std::uniform_real_distribution<double> dist(-k, k);
  for (auto& w : lp.input.weights) w = dist(rng);
  if (recurrent) {
    lp.recurrent = DenseWeights(post, post);
    const double kr = gain / std::sqrt(static_cast<double>(post));
    std::uniform_real_distribution<double> rdist(-kr, kr);
    for (auto& w : lp.recurrent->w) w = rdist(rng);
  }
  lp.decay_param.assign(post, decay_param_from_tau(tau_init));
  return lp;
}

}  // namespace

void for_each_tensor(NetworkParams& params,
                     const std::function<void(std::span<double>, const std::vector<double>*)>& fn) {
  visit_tensors(params, fn);
}

void for_each_tensor(
    const NetworkParams& params,
    const std::function<void(std::span<const double>, const std::vector<double>*)>& fn) {
  visit_tensors(params, [&fn](std::span<const double> t, const std::vector<double>* m) { fn(t, m); });
}

NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  NetworkParams params;
  std::size_t pre = spec.input_size;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const auto& ls = spec.layers[l];
    params.layers.push_back(make_layer(pre, ls.size, spec.input_delays(l),
                                       ls.kind == LayerKind::kRecurrent, ls.neuron.tau_init,
                                       ls.weight_gain, rng));
    pre = ls.size;
  }
  params.readout = make_layer(pre, spec.readout.size, spec.readout_delays(), false,
                              spec.readout.tau_init, spec.readout.weight_gain, rng);
  return params;
}

void check_params(const NetworkSpec& spec, const NetworkParams& params) {
  require(params.layers.size() == spec.layers.size(), "params: layer count mismatch");
  std::size_t pre = spec.input_size;
  auto check_layer = [&pre](const LayerParams& lp, std::size_t post, bool recurrent,
                            const DelaySpec& delays) {
    lp.input.validate();
    require(lp.input.pre == pre && lp.input.post == post, "params: projection shape mismatch");
    require(lp.input.delay_spec.delays == delays.delays, "params: delay set differs from the spec");
    require(lp.decay_param.size() == post, "params: decay parameter count mismatch");
    require(lp.recurrent.has_value() == recurrent, "params: recurrent weights mismatch");
    if (recurrent) {
      require(lp.recurrent->pre == post && lp.recurrent->post == post &&
                  lp.recurrent->w.size() == post * post,
              "params: recurrent shape mismatch");
    }
    pre = post;
  };
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    check_layer(params.layers[l], spec.layers[l].size,
                spec.layers[l].kind == LayerKind::kRecurrent, spec.input_delays(l));
  }
  check_layer(params.readout, spec.readout.size, false, spec.readout_delays());
}

}  // namespace dsnn
