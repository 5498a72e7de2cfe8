#include "dsnn/io.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace dsnn::io {

namespace {

// Reads j[key] as T, falling back to `fallback` when absent.
template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(where + ": missing required field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": field '" + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(known.begin(), known.end());
  for (const auto& [key, _] : j.items()) {
    if (!key.empty() && key[0] == '_') continue;  // comment keys
    if (!ok.contains(key)) throw ConfigError(where + ": unknown field '" + key + "'");
  }
}

std::string mode_string(SpikeMode m) { return m == SpikeMode::kHard ? "hard" : "soft"; }

SpikeMode mode_from_string(const std::string& s) {
  if (s == "hard") return SpikeMode::kHard;
  if (s == "soft") return SpikeMode::kSoft;
  throw ConfigError("surrogate mode must be 'hard' or 'soft', got '" + s + "'");
}

json tensor_json(const std::vector<std::size_t>& shape, const std::vector<double>& data) {
  return json{{"shape", shape}, {"data", data}};
}

std::vector<double> tensor_from_json(const json& j, const std::vector<std::size_t>& shape,
                                     const std::string& where) {
  const auto got = required<std::vector<std::size_t>>(j, "shape", where);
  if (got != shape) throw ConfigError(where + ": declared shape does not match the network");
  auto data = required<std::vector<double>>(j, "data", where);
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  if (data.size() != n) throw ConfigError(where + ": data length does not match declared shape");
  return data;
}

json layer_params_json(const LayerParams& lp) {
  const auto& p = lp.input;
  json j;
  j["input"] = {{"delays", p.delay_spec.delays},
                {"weights", tensor_json({p.pre, p.post, p.slots()}, p.weights)},
                {"mask", tensor_json({p.pre, p.post, p.slots()}, p.mask)}};
  if (p.delay_spec.stride) j["input"]["stride"] = *p.delay_spec.stride;
  if (p.delay_spec.depth) j["input"]["depth"] = *p.delay_spec.depth;
  if (lp.recurrent) j["recurrent"] = tensor_json({lp.recurrent->pre, lp.recurrent->post}, lp.recurrent->w);
  j["decay_param"] = lp.decay_param;
  return j;
}

LayerParams layer_params_from_json(const json& j, const std::string& where) {
  LayerParams lp;
  const auto& in = j.at("input");
  DelaySpec d;
  d.delays = required<std::vector<int>>(in, "delays", where);
  if (in.contains("stride")) d.stride = in.at("stride").get<int>();
  if (in.contains("depth")) d.depth = in.at("depth").get<int>();
  const auto shape = required<std::vector<std::size_t>>(in.at("weights"), "shape", where + ".weights");
  if (shape.size() != 3) throw ConfigError(where + ": projection tensors are 3-dimensional");
  try {
    lp.input = DelayLayerParams(shape[0], shape[1], d);
  } catch (const ContractViolation& e) {
    throw ConfigError(where + ": " + e.what());
  }
  lp.input.weights = tensor_from_json(in.at("weights"), shape, where + ".weights");
  lp.input.mask = tensor_from_json(in.at("mask"), shape, where + ".mask");
  for (double m : lp.input.mask) {
    if (m != 0.0 && m != 1.0) throw ConfigError(where + ": mask entries must be 0 or 1");
  }
  if (j.contains("recurrent")) {
    const auto rs = required<std::vector<std::size_t>>(j.at("recurrent"), "shape", where + ".recurrent");
    if (rs.size() != 2 || rs[0] != rs[1]) throw ConfigError(where + ": recurrent weights must be square");
    DenseWeights w(rs[0], rs[1]);
    w.w = tensor_from_json(j.at("recurrent"), rs, where + ".recurrent");
    lp.recurrent = std::move(w);
  }
  lp.decay_param = required<std::vector<double>>(j, "decay_param", where);
  return lp;
}

std::string neuron_kind_string(hw::NeuronKind k) { return k == hw::NeuronKind::kAlif ? "ALIF" : "LIF"; }

hw::NeuronKind neuron_kind_from_string(const std::string& s) {
  if (s == "LIF" || s == "lif") return hw::NeuronKind::kLif;
  if (s == "ALIF" || s == "alif") return hw::NeuronKind::kAlif;
  throw ConfigError("neuron kind must be LIF or ALIF, got '" + s + "'");
}

hw::ArchLayer arch_layer_from_json(const json& j, const std::string& where) {
  reject_unknown(j, {"size", "neuron", "recurrent", "delays", "active_synapses"}, where);
  hw::ArchLayer l;
  l.size = required<std::size_t>(j, "size", where);
  l.neuron = neuron_kind_from_string(value_or<std::string>(j, "neuron", "LIF"));
  l.recurrent = value_or<bool>(j, "recurrent", false);
  if (j.contains("delays")) l.delays = delay_spec_from_json(j.at("delays"));
  if (j.contains("active_synapses")) l.active_synapses = j.at("active_synapses").get<std::size_t>();
  return l;
}

json arch_layer_json(const hw::ArchLayer& l) {
  json j{{"size", l.size}, {"neuron", neuron_kind_string(l.neuron)}, {"recurrent", l.recurrent}};
  if (l.delays) j["delays"] = to_json(*l.delays);
  if (l.active_synapses) j["active_synapses"] = *l.active_synapses;
  return j;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

json to_json(const DelaySpec& d) {
  json j{{"delays", d.delays}};
  if (d.depth) j["depth"] = *d.depth;
  if (d.stride) j["stride"] = *d.stride;
  return j;
}

DelaySpec delay_spec_from_json(const json& j) {
  reject_unknown(j, {"delays", "depth", "stride"}, "delays");
  try {
    if (j.contains("delays")) {
      DelaySpec d = DelaySpec::from_list(j.at("delays").get<std::vector<int>>());
      if (j.contains("depth")) d.depth = j.at("depth").get<int>();
      if (j.contains("stride")) d.stride = j.at("stride").get<int>();
      return d;
    }
    return delay_spec_from_depth_stride(required<int>(j, "depth", "delays"),
                                        required<int>(j, "stride", "delays"));
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("delays: ") + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("delays: ") + e.what());
  }
}

json to_json(const NetworkSpec& spec) {
  json layers = json::array();
  for (const auto& l : spec.layers) {
    json jl{{"size", l.size},
            {"kind", to_string(l.kind)},
            {"u_th", l.neuron.u_th},
            {"tau_init", l.neuron.tau_init},
            {"weight_gain", l.weight_gain}};
    if (l.kind == LayerKind::kDelayed) jl["delays"] = to_json(l.delays);
    layers.push_back(jl);
  }
  json readout{{"size", spec.readout.size},
               {"tau_init", spec.readout.tau_init},
               {"weight_gain", spec.readout.weight_gain}};
  if (spec.readout.delays) readout["delays"] = to_json(*spec.readout.delays);
  return json{{"input_size", spec.input_size},
              {"layers", layers},
              {"readout", readout},
              {"surrogate", {{"beta", spec.surrogate.beta}, {"mode", mode_string(spec.surrogate.mode)}}}};
}

NetworkSpec network_spec_from_json(const json& j) {
  reject_unknown(j, {"input_size", "layers", "readout", "surrogate"}, "network");
  NetworkSpec spec;
  spec.input_size = required<std::size_t>(j, "input_size", "network");
  if (!j.contains("layers") || !j.at("layers").is_array()) throw ConfigError("network: 'layers' must be an array");
  for (const auto& jl : j.at("layers")) {
    reject_unknown(jl, {"size", "kind", "u_th", "tau_init", "weight_gain", "delays"}, "network.layers[]");
    LayerSpec l;
    l.size = required<std::size_t>(jl, "size", "network.layers[]");
    l.kind = layer_kind_from_string(value_or<std::string>(jl, "kind", "feedforward"));
    l.neuron.u_th = value_or<double>(jl, "u_th", 1.0);
    l.neuron.tau_init = value_or<double>(jl, "tau_init", 5.0);
    l.weight_gain = value_or<double>(jl, "weight_gain", 1.0);
    if (l.kind == LayerKind::kDelayed) {
      if (!jl.contains("delays")) throw ConfigError("network.layers[]: delayed layer needs 'delays'");
      l.delays = delay_spec_from_json(jl.at("delays"));
    }
    spec.layers.push_back(l);
  }
  const json& r = j.contains("readout") ? j.at("readout") : json::object();
  reject_unknown(r, {"size", "tau_init", "weight_gain", "delays"}, "network.readout");
  spec.readout.size = value_or<std::size_t>(r, "size", 1);
  spec.readout.tau_init = value_or<double>(r, "tau_init", 20.0);
  spec.readout.weight_gain = value_or<double>(r, "weight_gain", 1.0);
  if (r.contains("delays")) spec.readout.delays = delay_spec_from_json(r.at("delays"));
  if (j.contains("surrogate")) {
    const auto& s = j.at("surrogate");
    reject_unknown(s, {"beta", "mode"}, "network.surrogate");
    spec.surrogate.beta = value_or<double>(s, "beta", 10.0);
    spec.surrogate.mode = mode_from_string(value_or<std::string>(s, "mode", "hard"));
  }
  try {
    spec.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

json to_json(const NetworkParams& params) {
  json layers = json::array();
  for (const auto& lp : params.layers) layers.push_back(layer_params_json(lp));
  return json{{"layers", layers}, {"readout", layer_params_json(params.readout)}};
}

NetworkParams network_params_from_json(const json& j) {
  NetworkParams params;
  try {
    std::size_t l = 0;
    for (const auto& jl : j.at("layers")) {
      params.layers.push_back(layer_params_from_json(jl, "params.layers[" + std::to_string(l++) + "]"));
    }
    params.readout = layer_params_from_json(j.at("readout"), "params.readout");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("params: ") + e.what());
  }
  return params;
}

Hyperparams hyperparams_from_json(const json& j) {
  reject_unknown(j, {"learning_rate", "lr_decay", "batch_size", "epochs", "beta1", "beta2", "epsilon", "seed",
                     "loss", "workers"},
                 "train");
  Hyperparams hp;
  hp.learning_rate = value_or<double>(j, "learning_rate", hp.learning_rate);
  hp.lr_decay = value_or<double>(j, "lr_decay", hp.lr_decay);
  hp.batch_size = value_or<std::size_t>(j, "batch_size", hp.batch_size);
  hp.epochs = value_or<std::size_t>(j, "epochs", hp.epochs);
  hp.beta1 = value_or<double>(j, "beta1", hp.beta1);
  hp.beta2 = value_or<double>(j, "beta2", hp.beta2);
  hp.epsilon = value_or<double>(j, "epsilon", hp.epsilon);
  hp.seed = value_or<std::uint64_t>(j, "seed", hp.seed);
  hp.workers = value_or<std::size_t>(j, "workers", hp.workers);
  const auto loss = value_or<std::string>(j, "loss", "mse");
  if (loss == "mse") {
    hp.loss = LossKind::kMseFinal;
  } else if (loss == "cross_entropy") {
    hp.loss = LossKind::kCrossEntropyMax;
  } else {
    throw ConfigError("train.loss must be 'mse' or 'cross_entropy'");
  }
  try {
    hp.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  return hp;
}

json to_json(const Hyperparams& hp) {
  return json{{"learning_rate", hp.learning_rate}, {"lr_decay", hp.lr_decay},
              {"batch_size", hp.batch_size},
              {"epochs", hp.epochs},               {"beta1", hp.beta1},
              {"beta2", hp.beta2},                 {"epsilon", hp.epsilon},
              {"seed", hp.seed},                   {"workers", hp.workers},
              {"loss", hp.loss == LossKind::kMseFinal ? "mse" : "cross_entropy"}};
}

PruneConfig prune_config_from_json(const json& j) {
  reject_unknown(j, {"cap_per_pair", "keep_fraction", "refine_rounds", "finetune_epochs", "refine_stride"},
                 "prune");
  PruneConfig c;
  if (j.contains("cap_per_pair")) c.cap_per_pair = j.at("cap_per_pair").get<std::size_t>();
  if (j.contains("keep_fraction")) c.keep_fraction = j.at("keep_fraction").get<double>();
  c.refine_rounds = value_or<std::size_t>(j, "refine_rounds", c.refine_rounds);
  c.finetune_epochs = value_or<std::size_t>(j, "finetune_epochs", c.finetune_epochs);
  if (j.contains("refine_stride")) c.refine_stride = j.at("refine_stride").get<int>();
  try {
    c.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  return c;
}

hw::ArchSpec arch_from_json(const json& j) {
  reject_unknown(j, {"name", "input_size", "layers", "readout"}, "arch");
  hw::ArchSpec a;
  a.name = value_or<std::string>(j, "name", "model");
  a.input_size = required<std::size_t>(j, "input_size", "arch");
  if (!j.contains("layers") || !j.at("layers").is_array()) throw ConfigError("arch: 'layers' must be an array");
  for (const auto& jl : j.at("layers")) a.layers.push_back(arch_layer_from_json(jl, "arch.layers[]"));
  if (!j.contains("readout")) throw ConfigError("arch: missing 'readout'");
  a.readout = arch_layer_from_json(j.at("readout"), "arch.readout");
  try {
    a.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  return a;
}

json to_json(const hw::ArchSpec& arch) {
  json layers = json::array();
  for (const auto& l : arch.layers) layers.push_back(arch_layer_json(l));
  return json{{"name", arch.name}, {"input_size", arch.input_size}, {"layers", layers},
              {"readout", arch_layer_json(arch.readout)}};
}

hw::EnergyCoeffs coeffs_from_json(const json& j) {
  reject_unknown(j, {"weight_read", "state_read", "state_write", "spike_packet_read",
                     "spike_packet_write", "accumulate", "compare", "queue_push", "queue_pop"},
                 "coefficients");
  hw::EnergyCoeffs c;
  c.weight_read = required<double>(j, "weight_read", "coefficients");
  c.state_read = required<double>(j, "state_read", "coefficients");
  c.state_write = required<double>(j, "state_write", "coefficients");
  c.spike_packet_read = required<double>(j, "spike_packet_read", "coefficients");
  c.spike_packet_write = required<double>(j, "spike_packet_write", "coefficients");
  c.accumulate = required<double>(j, "accumulate", "coefficients");
  c.compare = required<double>(j, "compare", "coefficients");
  c.queue_push = required<double>(j, "queue_push", "coefficients");
  c.queue_pop = required<double>(j, "queue_pop", "coefficients");
  c.validate();
  return c;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json j{{"format_version", kCheckpointVersion},
         {"network", to_json(ckpt.spec)},
         {"params", to_json(ckpt.params)},
         {"metadata", ckpt.metadata}};
  auto out = open_out(path);
  out << j.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (!j.is_object() || !j.contains("format_version")) {
    throw ConfigError(path.string() + ": not a checkpoint (missing format_version)");
  }
  const int version = j.at("format_version").get<int>();
  if (version != kCheckpointVersion) {
    throw VersionMismatch(path.string() + ": checkpoint format_version " + std::to_string(version) +
                          ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  Checkpoint ck;
  ck.spec = network_spec_from_json(required<json>(j, "network", "checkpoint"));
  ck.params = network_params_from_json(required<json>(j, "params", "checkpoint"));
  ck.metadata = value_or<json>(j, "metadata", json::object());
  try {
    check_params(ck.spec, ck.params);
  } catch (const ContractViolation& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return ck;
}

DataConfig data_config_from_json(const json& j) {
  reject_unknown(j, {"task", "steps", "train_count", "test_count", "seed", "gaps", "jitter",
                     "channels", "bins", "train_dir", "test_dir"},
                 "data");
  DataConfig c;
  c.task = value_or<std::string>(j, "task", c.task);
  if (c.task != "adding" && c.task != "delay-xor" && c.task != "events") {
    throw ConfigError("data.task must be adding, delay-xor or events");
  }
  c.steps = value_or<std::size_t>(j, "steps", c.steps);
  c.train_count = value_or<std::size_t>(j, "train_count", c.train_count);
  c.test_count = value_or<std::size_t>(j, "test_count", c.test_count);
  c.seed = value_or<std::uint64_t>(j, "seed", c.seed);
  c.gaps = value_or<std::vector<int>>(j, "gaps", c.gaps);
  c.jitter = value_or<int>(j, "jitter", c.jitter);
  c.channels = value_or<std::size_t>(j, "channels", c.channels);
  c.bins = value_or<std::size_t>(j, "bins", c.task == "delay-xor" ? c.steps : c.bins);
  if (j.contains("train_dir")) c.train_dir = j.at("train_dir").get<std::string>();
  if (j.contains("test_dir")) c.test_dir = j.at("test_dir").get<std::string>();
  if (c.task == "events" && !c.train_dir) throw ConfigError("data: events task needs 'train_dir'");
  return c;
}

Dataset load_dataset_dir(const std::filesystem::path& dir, const std::string& task, std::size_t bins) {
  Dataset data;
  for (const auto& f : tasks::list_samples(dir)) {
    if (task == "adding") {
      const auto s = tasks::read_adding_csv(f);
      data.push_back({tasks::encode_adding(s), s.target, -1});
    } else {
      const auto ev = tasks::read_event_csv(f);
      if (ev.label < 0) throw DataError(f.string() + ": negative label");
      data.push_back({tasks::bin_events(ev, bins), 0.0, ev.label});
    }
  }
  return data;
}

Datasets load_datasets(const DataConfig& cfg) {
  Datasets d;
  d.loss = cfg.task == "adding" ? LossKind::kMseFinal : LossKind::kCrossEntropyMax;
  const std::uint64_t test_seed = cfg.seed + 0x9e3779b9ULL;
  if (cfg.train_dir) {
    d.train = load_dataset_dir(*cfg.train_dir, cfg.task, cfg.bins);
    if (cfg.test_dir) d.test = load_dataset_dir(*cfg.test_dir, cfg.task, cfg.bins);
    return d;
  }
  try {
    if (cfg.task == "adding") {
      d.train = tasks::to_dataset(tasks::gen_adding(cfg.steps, cfg.train_count, cfg.seed));
      d.test = tasks::to_dataset(tasks::gen_adding(cfg.steps, cfg.test_count, test_seed));
    } else {
      tasks::DelayXorConfig x{cfg.steps, cfg.gaps, cfg.train_count, cfg.seed, cfg.jitter, cfg.channels};
      d.train = tasks::to_dataset(tasks::gen_delay_xor(x), cfg.bins);
      x.count = cfg.test_count;
      x.seed = test_seed;
      d.test = tasks::to_dataset(tasks::gen_delay_xor(x), cfg.bins);
    }
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("data: ") + e.what());
  }
  return d;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& rows,
                       std::uint64_t seed) {
  auto out = open_out(path);
  out << "# seed=" << seed << "\n";
  out << "epoch,loss,accuracy";
  const std::size_t layers = rows.empty() ? 0 : rows.front().spikes_per_step.size();
  for (std::size_t l = 0; l < layers; ++l) out << ",spikes_per_step_layer" << l + 1;
  out << "\n";
  for (const auto& r : rows) {
    out << r.epoch << "," << r.loss << ",";
    if (r.accuracy) out << *r.accuracy;
    for (double s : r.spikes_per_step) out << "," << s;
    out << "\n";
  }
}

void write_activity_csv(const std::filesystem::path& path, const ActivityTrace& trace,
                        std::uint64_t seed) {
  auto out = open_out(path);
  out << "# seed=" << seed << "\n";
  out << "# steps=" << trace.steps << "\n";
  out << "layer,avg_spikes_per_step,max_spikes_per_step,total_spikes\n";
  for (const auto& l : trace.layers) {
    out << l.name << "," << l.avg_per_step << "," << l.max_per_step << "," << l.total << "\n";
  }
}

ActivityTrace read_activity_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  ActivityTrace trace;
  bool have_steps = false;
  bool have_header = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos && line.find("steps") != std::string::npos && line.find("steps") < eq) {
        try {
          trace.steps = std::stoul(line.substr(eq + 1));
        } catch (const std::exception&) {
          throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad steps comment");
        }
        have_steps = true;
      }
      continue;
    }
    if (!have_header) {
      if (line.rfind("layer,avg_spikes_per_step,max_spikes_per_step,total_spikes", 0) != 0) {
        throw DataError(path.string() + ": unexpected header '" + line + "'");
      }
      have_header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string name, avg, peak, total;
    if (!std::getline(ss, name, ',') || !std::getline(ss, avg, ',') || !std::getline(ss, peak, ',') ||
        !std::getline(ss, total, ',')) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 4 fields");
    }
    try {
      trace.layers.push_back({name, std::stod(avg), std::stod(peak), std::stod(total)});
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric field");
    }
  }
  if (!have_header) throw DataError(path.string() + ": missing header row");
  if (!have_steps) throw DataError(path.string() + ": missing '# steps=<T>' comment");
  trace.validate();
  return trace;
}

void write_prune_report_csv(const std::filesystem::path& path,
                            const std::vector<RoundReport>& rounds, std::uint64_t seed) {
  auto out = open_out(path);
  out << "# seed=" << seed << "\n";
  out << "round,params,loss,accuracy";
  const std::size_t layers = rounds.empty() ? 0 : rounds.front().spikes_per_step.size();
  for (std::size_t l = 0; l < layers; ++l) out << ",spikes_per_step_layer" << l + 1;
  out << "\n";
  for (const auto& r : rounds) {
    out << r.round << "," << r.params << "," << r.loss << ",";
    if (r.accuracy) out << *r.accuracy;
    for (double s : r.spikes_per_step) out << "," << s;
    out << "\n";
  }
}

void write_cost_csv(const std::filesystem::path& path, const std::vector<hw::CostReport>& reports,
                    const std::vector<std::optional<hw::SavingFactors>>& factors,
                    std::uint64_t seed) {
  auto out = open_out(path);
  out << "# seed=" << seed << "\n";
  out << "name,mechanism,steps,weights,time_constants,param_count,state_words,delay_words,"
         "memory_words,synaptic_accumulations,weight_reads,neuron_updates,state_reads,"
         "state_writes,compares,spike_packet_reads,spike_packet_writes,ring_accumulations,"
         "queue_pushes,queue_pops,neurosynaptic_energy_j,overhead_energy_j,total_energy_j,"
         "energy_saving_factor,memory_saving_factor\n";
  for (std::size_t n = 0; n < reports.size(); ++n) {
    const auto& r = reports[n];
    const auto& c = r.counts;
    out << r.name << "," << hw::to_string(r.mechanism) << "," << r.steps << "," << r.params.weights
        << "," << r.params.time_constants << "," << r.params.total << "," << r.state_words << ","
        << r.delay_words << "," << r.memory_words << "," << c.synaptic_accumulations << ","
        << c.weight_reads << "," << c.neuron_updates << "," << c.state_reads << "," << c.state_writes
        << "," << c.compares << "," << c.spike_packet_reads << "," << c.spike_packet_writes << ","
        << c.ring_accumulations << "," << c.queue_pushes << "," << c.queue_pops << ","
        << r.neurosynaptic_energy << "," << r.overhead_energy << "," << r.total_energy << ",";
    if (n < factors.size() && factors[n]) out << factors[n]->energy << "," << factors[n]->memory;
    else out << ",";
    out << "\n";
  }
}

std::string format_cost_table(const std::vector<hw::CostReport>& reports,
                              const std::vector<std::optional<hw::SavingFactors>>& factors) {
  std::ostringstream os;
  os << std::left << std::setw(26) << "measurement";
  for (const auto& r : reports) os << std::right << std::setw(14) << (r.name + "/" + hw::to_string(r.mechanism));
  os << "\n";
  auto row = [&](const std::string& label, auto&& get, int precision) {
    os << std::left << std::setw(26) << label << std::fixed << std::setprecision(precision);
    for (std::size_t n = 0; n < reports.size(); ++n) os << std::right << std::setw(14) << get(n);
    os << "\n";
  };
  row("params (incl. tau)", [&](std::size_t n) { return static_cast<double>(reports[n].params.total); }, 0);
  row("state words", [&](std::size_t n) { return static_cast<double>(reports[n].state_words); }, 0);
  row("delay words", [&](std::size_t n) { return static_cast<double>(reports[n].delay_words); }, 0);
  row("memory words", [&](std::size_t n) { return static_cast<double>(reports[n].memory_words); }, 0);
  row("synaptic ops / inference", [&](std::size_t n) { return reports[n].counts.synaptic_accumulations; }, 1);
  row("energy (uJ)", [&](std::size_t n) { return reports[n].neurosynaptic_energy * 1e6; }, 4);
  row("overhead energy (uJ)", [&](std::size_t n) { return reports[n].overhead_energy * 1e6; }, 4);
  row("total energy (uJ)", [&](std::size_t n) { return reports[n].total_energy * 1e6; }, 4);
  bool any = false;
  for (const auto& f : factors) any = any || f.has_value();
  if (any) {
    auto factor = [&](std::size_t n, bool energy) {
      if (n >= factors.size() || !factors[n]) return std::nan("");
      return energy ? factors[n]->energy : factors[n]->memory;
    };
    row("energy saving factor", [&](std::size_t n) { return factor(n, true); }, 3);
    row("memory saving factor", [&](std::size_t n) { return factor(n, false); }, 3);
  }
  return os.str();
}

}  // namespace dsnn::io
