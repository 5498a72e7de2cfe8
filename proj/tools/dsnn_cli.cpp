// dsnn: generate data, train, prune, evaluate and cost delay SNNs.
//
// Exit codes: 0 ok, 2 configuration / schema error, 3 data or missing file,
// 4 numerical divergence, 5 checkpoint format version mismatch.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dsnn/errors.hpp"
#include "dsnn/hwcost.hpp"
#include "dsnn/io.hpp"
#include "dsnn/network.hpp"
#include "dsnn/pruning.hpp"
#include "dsnn/tasks.hpp"
#include "dsnn/training.hpp"

namespace fs = std::filesystem;
using namespace dsnn;
using io::json;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kDiverged = 4, kVersion = 5 };

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

// Sections of a run configuration file; every section is optional here and
// checked by the subcommand that needs it.
struct RunConfig {
  json raw = json::object();
  std::uint64_t seed = 0;

  bool has(const char* key) const { return raw.contains(key); }
  const json& section(const char* key) const {
    if (!raw.contains(key)) throw ConfigError(std::string("config: missing section '") + key + "'");
    return raw.at(key);
  }
};

RunConfig load_run_config(const Globals& g, bool config_required) {
  RunConfig rc;
  if (!g.config.empty()) {
    if (!fs::exists(g.config)) throw DataError("config file not found: " + g.config);
    rc.raw = io::read_json(g.config);
    if (!rc.raw.is_object()) throw ConfigError("config: top level must be an object");
    for (const auto& [key, _] : rc.raw.items()) {
      static const std::vector<std::string> known{"seed", "data", "network", "train", "prune", "cost"};
      if (key[0] != '_' && std::find(known.begin(), known.end(), key) == known.end()) {
        throw ConfigError("config: unknown section '" + key + "'");
      }
    }
  } else if (config_required) {
    throw ConfigError("--config is required for this command");
  }
  if (g.seed) {
    rc.seed = *g.seed;
  } else if (rc.raw.contains("seed")) {
    rc.seed = rc.raw.at("seed").get<std::uint64_t>();
  } else {
    throw ConfigError("a run seed is mandatory (--seed or \"seed\" in the config)");
  }
  return rc;
}

io::DataConfig data_config(const RunConfig& rc) {
  const json& j = rc.section("data");
  auto cfg = io::data_config_from_json(j);
  if (!j.contains("seed")) cfg.seed = rc.seed;
  return cfg;
}

Hyperparams hyperparams(const RunConfig& rc, LossKind loss) {
  json j = rc.has("train") ? rc.raw.at("train") : json::object();
  auto hp = io::hyperparams_from_json(j);
  hp.seed = rc.seed;
  if (!j.contains("loss")) hp.loss = loss;
  return hp;
}

void print_epoch(const EpochMetrics& m) {
  std::printf("epoch %3zu  loss %.6f", m.epoch, m.loss);
  if (m.accuracy) std::printf("  acc %.4f", *m.accuracy);
  std::printf("  spikes/step");
  for (double s : m.spikes_per_step) std::printf(" %.2f", s);
  std::printf("\n");
  std::fflush(stdout);
}

json eval_json(const EvalResult& ev) {
  json j{{"loss", ev.loss}};
  if (ev.accuracy) j["accuracy"] = *ev.accuracy;
  return j;
}

void print_eval(const char* label, const EvalResult& ev) {
  std::printf("%s loss %.6f", label, ev.loss);
  if (ev.accuracy) std::printf("  accuracy %.4f", *ev.accuracy);
  std::printf("\n");
}

int cmd_gen(const Globals& g, const std::string& split_dirs) {
  const auto rc = load_run_config(g, true);
  const auto cfg = data_config(rc);
  if (cfg.task == "events") throw ConfigError("gen: events datasets are ingested, not generated");
  const fs::path out(g.out);
  auto write_split = [&](const fs::path& dir, std::size_t count, std::uint64_t seed) {
    fs::create_directories(dir);
    char name[32];
    if (cfg.task == "adding") {
      const auto samples = tasks::gen_adding(cfg.steps, count, seed);
      for (std::size_t n = 0; n < samples.size(); ++n) {
        std::snprintf(name, sizeof name, "sample_%06zu.csv", n);
        tasks::write_adding_csv(dir / name, samples[n], seed);
      }
    } else {
      tasks::DelayXorConfig x{cfg.steps, cfg.gaps, count, seed, cfg.jitter, cfg.channels};
      const auto sets = tasks::gen_delay_xor(x);
      for (std::size_t n = 0; n < sets.size(); ++n) {
        std::snprintf(name, sizeof name, "sample_%06zu.csv", n);
        tasks::write_event_csv(dir / name, sets[n], seed);
      }
    }
    std::printf("wrote %zu %s samples to %s\n", count, cfg.task.c_str(), dir.c_str());
  };
  // Same seeds as in-memory generation, so training from files or from the
  // config gives identical data.
  write_split(out / "train", cfg.train_count, cfg.seed);
  if (split_dirs == "both") write_split(out / "test", cfg.test_count, cfg.seed + 0x9e3779b9ULL);
  return kOk;
}

int cmd_train(const Globals& g) {
  const auto rc = load_run_config(g, true);
  const auto data = io::load_datasets(data_config(rc));
  const auto spec = io::network_spec_from_json(rc.section("network"));
  const auto hp = hyperparams(rc, data.loss);
  const fs::path out(g.out);
  fs::create_directories(out);

  const auto result = train(spec, data.train, hp, [](const EpochMetrics& m) {
    print_epoch(m);
    return true;
  });
  io::write_metrics_csv(out / "metrics.csv", result.history, rc.seed);

  io::Checkpoint ck{spec, result.params, json::object()};
  ck.metadata["seed"] = rc.seed;
  ck.metadata["epochs"] = result.history.size();
  ck.metadata["hyperparams"] = io::to_json(hp);
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    ck.metadata["final_train_loss"] = last.loss;
    if (last.accuracy) ck.metadata["final_train_accuracy"] = *last.accuracy;
  }
  if (!data.test.empty()) {
    const auto ev = evaluate(spec, result.params, data.test, hp.loss, hp.workers);
    print_eval("test", ev);
    ck.metadata["test"] = eval_json(ev);
  }
  io::save_checkpoint(out / "checkpoint.json", ck);
  std::printf("checkpoint: %s\n", (out / "checkpoint.json").c_str());
  return kOk;
}

int cmd_prune(const Globals& g, const std::string& checkpoint, std::optional<std::size_t> cap,
              std::optional<double> keep) {
  const auto rc = load_run_config(g, true);
  const auto ck = io::load_checkpoint(checkpoint);
  const auto data = io::load_datasets(data_config(rc));
  auto pj = rc.has("prune") ? rc.raw.at("prune") : json::object();
  if (cap) {
    pj.erase("keep_fraction");
    pj["cap_per_pair"] = *cap;
  }
  if (keep) {
    pj.erase("cap_per_pair");
    pj["keep_fraction"] = *keep;
  }
  const auto pc = io::prune_config_from_json(pj);
  const auto hp = hyperparams(rc, data.loss);
  const fs::path out(g.out);
  fs::create_directories(out);

  const auto result = prune_finetune_loop(ck.spec, ck.params, data.train, pc, hp);
  for (const auto& r : result.rounds) {
    std::printf("round %zu  params %zu  loss %.6f", r.round, r.params, r.loss);
    if (r.accuracy) std::printf("  acc %.4f", *r.accuracy);
    std::printf("\n");
  }
  io::write_prune_report_csv(out / "prune_report.csv", result.rounds, rc.seed);

  io::Checkpoint next{result.spec, result.params, ck.metadata};
  next.metadata["seed"] = rc.seed;
  next.metadata["pruned_from"] = checkpoint;
  next.metadata["prune"] = pj;
  if (!data.test.empty()) {
    const auto ev = evaluate(result.spec, result.params, data.test, hp.loss, hp.workers);
    print_eval("test", ev);
    next.metadata["test"] = eval_json(ev);
  }
  io::save_checkpoint(out / "checkpoint.json", next);
  std::printf("checkpoint: %s\n", (out / "checkpoint.json").c_str());
  return kOk;
}

int cmd_eval(const Globals& g, const std::string& checkpoint, const std::string& split,
             const std::string& data_dir, const std::string& task, std::size_t bins) {
  const auto ck = io::load_checkpoint(checkpoint);
  Globals gg = g;
  if (!gg.seed && ck.metadata.contains("seed")) gg.seed = ck.metadata.at("seed").get<std::uint64_t>();
  const auto rc = load_run_config(gg, false);

  Dataset data;
  LossKind loss = LossKind::kMseFinal;
  if (!data_dir.empty()) {
    if (!fs::is_directory(data_dir)) throw DataError("data directory not found: " + data_dir);
    data = io::load_dataset_dir(data_dir, task, bins);
    loss = task == "adding" ? LossKind::kMseFinal : LossKind::kCrossEntropyMax;
  } else {
    auto sets = io::load_datasets(data_config(rc));
    data = split == "train" ? std::move(sets.train) : std::move(sets.test);
    loss = sets.loss;
  }
  if (data.empty()) throw DataError("eval: no samples in the selected dataset");

  const auto ev = evaluate(ck.spec, ck.params, data, loss);
  print_eval(split.c_str(), ev);
  const fs::path out(g.out);
  EpochMetrics row;
  row.epoch = ck.metadata.value("epochs", std::size_t{0});
  row.loss = ev.loss;
  row.accuracy = ev.accuracy;
  for (std::size_t p = 1; p < ev.activity.layers.size(); ++p) {
    row.spikes_per_step.push_back(ev.activity.layers[p].avg_per_step);
  }
  io::write_metrics_csv(out / "eval_metrics.csv", {row}, rc.seed);
  io::write_activity_csv(out / "activity.csv", ev.activity, rc.seed);
  std::printf("activity trace: %s\n", (out / "activity.csv").c_str());
  return kOk;
}

struct CostArgs {
  std::vector<std::string> archs;
  std::vector<std::string> checkpoints;
  std::vector<std::string> traces;
  std::string coeffs;
  std::string mechanism = "ring";
  std::string baseline_arch;
  std::string baseline_trace;
};

hw::ArchSpec load_arch(const std::string& path) {
  if (!fs::exists(path)) throw DataError("arch file not found: " + path);
  return io::arch_from_json(io::read_json(path));
}

int cmd_cost(const Globals& g, const CostArgs& a) {
  const auto rc = load_run_config(g, false);
  std::string coeff_path = a.coeffs;
  std::string mech = a.mechanism;
  if (rc.has("cost")) {
    const auto& c = rc.raw.at("cost");
    if (coeff_path.empty() && c.contains("coefficients")) coeff_path = c.at("coefficients").get<std::string>();
    if (c.contains("mechanism")) mech = c.at("mechanism").get<std::string>();
  }
  if (coeff_path.empty()) throw ConfigError("cost: --coeffs (or cost.coefficients) is required");
  if (!fs::exists(coeff_path)) throw DataError("coefficient file not found: " + coeff_path);
  const auto coeffs = io::coeffs_from_json(io::read_json(coeff_path));
  const auto mechanism = hw::mechanism_from_string(mech);

  std::vector<hw::ArchSpec> archs;
  for (const auto& p : a.archs) archs.push_back(load_arch(p));
  for (const auto& p : a.checkpoints) {
    const auto ck = io::load_checkpoint(p);
    archs.push_back(hw::arch_from_network(ck.spec, &ck.params, fs::path(p).parent_path().filename().string()));
  }
  if (archs.empty()) throw ConfigError("cost: give at least one --arch or --checkpoint");
  if (a.traces.size() != archs.size()) {
    throw ConfigError("cost: need exactly one --trace per model (" + std::to_string(archs.size()) +
                      " models, " + std::to_string(a.traces.size()) + " traces)");
  }

  std::optional<hw::CostReport> baseline;
  if (!a.baseline_arch.empty()) {
    if (a.baseline_trace.empty()) throw ConfigError("cost: --baseline-arch needs --baseline-trace");
    baseline = hw::cost_report(load_arch(a.baseline_arch), io::read_activity_csv(a.baseline_trace),
                               coeffs, hw::DelayMechanism::kNone);
  }

  std::vector<hw::CostReport> reports;
  std::vector<std::optional<hw::SavingFactors>> factors;
  for (std::size_t n = 0; n < archs.size(); ++n) {
    reports.push_back(hw::cost_report(archs[n], io::read_activity_csv(a.traces[n]), coeffs, mechanism));
    factors.push_back(baseline ? std::optional(hw::saving_factors(*baseline, reports.back())) : std::nullopt);
  }
  std::cout << io::format_cost_table(reports, factors);
  const fs::path out(g.out);
  io::write_cost_csv(out / "cost.csv", reports, factors, rc.seed);
  std::printf("cost report: %s\n", (out / "cost.csv").c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train, prune and cost spiking networks with axonal delays"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "Run seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  auto* gen = app.add_subcommand("gen", "Write the configured synthetic dataset as CSV files");
  std::string splits = "both";
  gen->add_option("--splits", splits, "train | both")->check(CLI::IsMember({"train", "both"}));

  auto* trn = app.add_subcommand("train", "Train a network; writes checkpoint.json and metrics.csv");

  auto* prn = app.add_subcommand("prune", "Prune delays, refine and fine-tune a checkpoint");
  std::string prune_ckpt;
  std::optional<std::size_t> cap;
  std::optional<double> keep;
  prn->add_option("--checkpoint", prune_ckpt, "Input checkpoint")->required();
  prn->add_option("--cap", cap, "Keep at most K delays per neuron pair");
  prn->add_option("--keep-fraction", keep, "Keep this fraction of synapses per layer");

  auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint; writes activity.csv");
  std::string eval_ckpt, split = "test", data_dir, task = "adding";
  std::size_t bins = 250;
  evl->add_option("--checkpoint", eval_ckpt, "Checkpoint to evaluate")->required();
  evl->add_option("--split", split, "train | test (config datasets)")->check(CLI::IsMember({"train", "test"}));
  evl->add_option("--data-dir", data_dir, "Evaluate on a directory of sample CSVs instead");
  evl->add_option("--task", task, "Task of --data-dir")->check(CLI::IsMember({"adding", "delay-xor", "events"}));
  evl->add_option("--bins", bins, "Time bins for event data");

  auto* cst = app.add_subcommand("cost", "Memory and energy estimate from an architecture and activity");
  CostArgs ca;
  cst->add_option("--arch", ca.archs, "Architecture file (repeatable)");
  cst->add_option("--checkpoint", ca.checkpoints, "Checkpoint to cost (repeatable)");
  cst->add_option("--trace", ca.traces, "Activity CSV, one per model in order: archs then checkpoints");
  cst->add_option("--coeffs", ca.coeffs, "Energy coefficient file (JSON, joules)");
  cst->add_option("--mechanism", ca.mechanism, "ring | queue | none")->capture_default_str();
  cst->add_option("--baseline-arch", ca.baseline_arch, "Baseline for saving factors");
  cst->add_option("--baseline-trace", ca.baseline_trace, "Activity CSV of the baseline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*gen) return cmd_gen(g, splits);
    if (*trn) return cmd_train(g);
    if (*prn) return cmd_prune(g, prune_ckpt, cap, keep);
    if (*evl) return cmd_eval(g, eval_ckpt, split, data_dir, task, bins);
    if (*cst) return cmd_cost(g, ca);
  } catch (const io::VersionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kVersion;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ContractViolation& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const io::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
