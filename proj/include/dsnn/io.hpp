#pragma once

// Structured-text formats: run configuration, checkpoints, architecture and
// coefficient files (JSON), metrics / activity / cost reports (CSV).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsnn/errors.hpp"
#include "dsnn/hwcost.hpp"
#include "dsnn/network.hpp"
#include "dsnn/pruning.hpp"
#include "dsnn/tasks.hpp"
#include "dsnn/training.hpp"

namespace dsnn::io {

using nlohmann::json;

inline constexpr int kCheckpointVersion = 1;

// Checkpoint whose format_version differs from kCheckpointVersion.
class VersionMismatch : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

json to_json(const DelaySpec& d);
DelaySpec delay_spec_from_json(const json& j);
json to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const json& j);
json to_json(const NetworkParams& params);
NetworkParams network_params_from_json(const json& j);
Hyperparams hyperparams_from_json(const json& j);
json to_json(const Hyperparams& hp);
PruneConfig prune_config_from_json(const json& j);
hw::ArchSpec arch_from_json(const json& j);
json to_json(const hw::ArchSpec& arch);
hw::EnergyCoeffs coeffs_from_json(const json& j);

struct Checkpoint {
  NetworkSpec spec;
  NetworkParams params;
  json metadata = json::object();  // epochs, final metrics, seed
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Parses a JSON file; missing file -> DataError, syntax error -> ConfigError.
json read_json(const std::filesystem::path& path);

// Dataset section of a run configuration.
struct DataConfig {
  std::string task = "adding";  // adding | delay-xor | events
  std::size_t steps = 50;
  std::size_t train_count = 2000;
  std::size_t test_count = 500;
  std::uint64_t seed = 1;
  std::vector<int> gaps{5, 20};
  int jitter = 1;
  std::size_t channels = 1;
  std::size_t bins = 250;
  std::optional<std::filesystem::path> train_dir;
  std::optional<std::filesystem::path> test_dir;
};

DataConfig data_config_from_json(const json& j);

struct Datasets {
  Dataset train;
  Dataset test;
  LossKind loss = LossKind::kMseFinal;
};

/// Generates or loads the train / test sets described by `cfg`.
Datasets load_datasets(const DataConfig& cfg);
/// Loads every sample of a directory written by `dsnn gen` (adding or event CSVs).
Dataset load_dataset_dir(const std::filesystem::path& dir, const std::string& task,
                         std::size_t bins);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& rows,
                       std::uint64_t seed);
void write_activity_csv(const std::filesystem::path& path, const ActivityTrace& trace,
                        std::uint64_t seed);
ActivityTrace read_activity_csv(const std::filesystem::path& path);
void write_prune_report_csv(const std::filesystem::path& path,
                            const std::vector<RoundReport>& rounds, std::uint64_t seed);

/// CSV rows (one per report) with an optional saving-factor column pair.
void write_cost_csv(const std::filesystem::path& path, const std::vector<hw::CostReport>& reports,
                    const std::vector<std::optional<hw::SavingFactors>>& factors,
                    std::uint64_t seed);
std::string format_cost_table(const std::vector<hw::CostReport>& reports,
                              const std::vector<std::optional<hw::SavingFactors>>& factors);

}  // namespace dsnn::io
