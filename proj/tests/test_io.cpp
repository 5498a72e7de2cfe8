#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dsnn/io.hpp"
#include "dsnn/training.hpp"
#include "support.hpp"

using namespace dsnn;
using namespace dsnn::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dsnn_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("checkpoint round trip is bit exact") {
  const auto dir = scratch_dir("ckpt");
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = random_network(rng, 3, 5);
    const auto params = init_params(spec, static_cast<std::uint64_t>(trial));
    io::Checkpoint ck{spec, params, {{"seed", trial}}};
    io::save_checkpoint(dir / "c.json", ck);
    const auto back = io::load_checkpoint(dir / "c.json");
    CHECK(back.params == params);
    CHECK(io::to_json(back.spec) == io::to_json(spec));
    CHECK(back.metadata.at("seed") == trial);
    const auto input = random_input(rng, 9, spec.input_size, rng.coin());
    CHECK(forward(back.spec, back.params, input) == forward(spec, params, input));
  }
}

TEST_CASE("checkpoint errors") {
  const auto dir = scratch_dir("ckpt_err");
  Rng rng(5);
  const auto spec = random_network(rng);
  io::save_checkpoint(dir / "c.json", {spec, init_params(spec, 1), {}});
  auto j = io::read_json(dir / "c.json");

  auto bumped = j;
  bumped["format_version"] = io::kCheckpointVersion + 1;
  write_text(dir / "v.json", bumped.dump());
  CHECK_THROWS_AS(io::load_checkpoint(dir / "v.json"), io::VersionMismatch);

  auto shape = j;
  shape["network"]["readout"]["size"] = spec.readout.size + 1;
  write_text(dir / "s.json", shape.dump());
  CHECK_THROWS_AS(io::load_checkpoint(dir / "s.json"), ConfigError);

  write_text(dir / "bad.json", "{ not json");
  CHECK_THROWS_AS(io::load_checkpoint(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(io::load_checkpoint(dir / "missing.json"), DataError);
}

TEST_CASE("network spec schema") {
  const io::json good = {{"input_size", 2},
                         {"layers", {{{"size", 4}, {"kind", "feedforward"}},
                                     {{"size", 4}, {"kind", "delayed"}, {"delays", {{"depth", 10}, {"stride", 5}}}}}},
                         {"readout", {{"size", 1}}}};
  const auto spec = io::network_spec_from_json(good);
  CHECK(spec.input_delays(1).delays == std::vector<int>{0, 5});
  CHECK(io::to_json(io::network_spec_from_json(io::to_json(spec))) == io::to_json(spec));

  auto unknown = good;
  unknown["layers"][0]["sise"] = 4;
  CHECK_THROWS_AS(io::network_spec_from_json(unknown), ConfigError);
  auto kind = good;
  kind["layers"][0]["kind"] = "convolutional";
  CHECK_THROWS_AS(io::network_spec_from_json(kind), ConfigError);
  auto missing = good;
  missing.erase("input_size");
  CHECK_THROWS_AS(io::network_spec_from_json(missing), ConfigError);
}

TEST_CASE("metrics and activity CSV carry the seed and header") {
  const auto dir = scratch_dir("csv");
  EpochMetrics m;
  m.epoch = 3;
  m.loss = 0.25;
  m.accuracy = 0.5;
  m.spikes_per_step = {1.5, 2.0};
  io::write_metrics_csv(dir / "m.csv", {m}, 77);
  const auto ml = lines_of(dir / "m.csv");
  REQUIRE(ml.size() == 3);
  CHECK(ml[0] == "# seed=77");
  CHECK(ml[1] == "epoch,loss,accuracy,spikes_per_step_layer1,spikes_per_step_layer2");

  ActivityTrace t;
  t.steps = 10;
  t.layers = {{"input", 0.5, 2, 5}, {"layer1", 1.25, 3, 12.5}};
  io::write_activity_csv(dir / "a.csv", t, 77);
  const auto al = lines_of(dir / "a.csv");
  CHECK(al[0] == "# seed=77");
  const auto back = io::read_activity_csv(dir / "a.csv");
  CHECK(back.steps == 10);
  REQUIRE(back.layers.size() == 2);
  CHECK(back.layers[1].name == "layer1");
  CHECK(back.layers[1].avg_per_step == 1.25);
  CHECK(back.layers[1].max_per_step == 3);
  CHECK(back.layers[1].total == 12.5);

  write_text(dir / "bad.csv", "# seed=1\nlayer,avg_spikes_per_step,max_spikes_per_step,total_spikes\ninput,0,0,0\n");
  CHECK_THROWS_AS(io::read_activity_csv(dir / "bad.csv"), DataError);
  write_text(dir / "inv.csv",
             "# seed=1\n# steps=4\nlayer,avg_spikes_per_step,max_spikes_per_step,total_spikes\ninput,2,1,8\n");
  CHECK_THROWS_AS(io::read_activity_csv(dir / "inv.csv"), DataError);
}

TEST_CASE("configuration sections") {
  CHECK(io::hyperparams_from_json({{"learning_rate", 0.02}, {"loss", "cross_entropy"}}).loss ==
        LossKind::kCrossEntropyMax);
  CHECK_THROWS_AS(io::hyperparams_from_json({{"learnin_rate", 0.02}}), ConfigError);
  CHECK_THROWS_AS(io::hyperparams_from_json({{"loss", "hinge"}}), ConfigError);
  CHECK(io::prune_config_from_json({{"cap_per_pair", 2}}).cap_per_pair == 2u);
  CHECK_THROWS_AS(io::coeffs_from_json({{"weight_read", 1e-12}}), ConfigError);
  const auto c = io::coeffs_from_json(io::read_json(DSNN_SOURCE_DIR "/data/energy_coeffs.json"));
  CHECK(c.weight_read == 5e-12);
  CHECK_THROWS_AS(io::data_config_from_json({{"task", "mnist"}}), ConfigError);
  CHECK_THROWS_AS(io::data_config_from_json({{"task", "events"}}), ConfigError);
}

TEST_CASE("architecture files round trip") {
  for (const char* name : {"R1", "R2", "D1", "D2"}) {
    const auto a = io::arch_from_json(io::read_json(fs::path(DSNN_SOURCE_DIR "/data/shd_models") / (std::string(name) + ".json")));
    const auto b = io::arch_from_json(io::to_json(a));
    CHECK(hw::param_count(a).total == hw::param_count(b).total);
    CHECK(hw::ring_buffer_overhead(a).words == hw::ring_buffer_overhead(b).words);
    CHECK(b.name == name);
  }
}

TEST_CASE("cost CSV") {
  const auto dir = scratch_dir("cost");
  const auto arch = io::arch_from_json(io::read_json(DSNN_SOURCE_DIR "/data/shd_models/D1.json"));
  const auto act = io::read_activity_csv(DSNN_SOURCE_DIR "/data/shd_models/D1_activity.csv");
  const auto coeffs = io::coeffs_from_json(io::read_json(DSNN_SOURCE_DIR "/data/energy_coeffs.json"));
  const auto r = hw::cost_report(arch, act, coeffs, hw::DelayMechanism::kDelayQueue);
  io::write_cost_csv(dir / "c.csv", {r}, {std::nullopt}, 9);
  const auto l = lines_of(dir / "c.csv");
  REQUIRE(l.size() == 3);
  CHECK(l[0] == "# seed=9");
  CHECK(l[1].rfind("name,mechanism,", 0) == 0);
  CHECK(l[2].find(",1890,") != std::string::npos);
  CHECK(io::format_cost_table({r}, {std::nullopt}).find("1890") != std::string::npos);
}
