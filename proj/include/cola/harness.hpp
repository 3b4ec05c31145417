#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cola/mcts.hpp"

namespace cola::harness {

struct SynthParams {
  int num_layers = 8;
  int state_dim = 3;
  int modulus = 5;
};

struct ToyParams {
  int num_layers = 6;
  int model_dim = 16;
  int vocab_size = 16;
  int max_seq_len = 16;
  int seq_len = 8;
  std::string labeling = "self";  // self | adversarial
};

struct ExternalParams {
  std::string server;  // shell command, or host:port
  int num_layers = 8;
  int timeout_ms = 30000;
};

// One JSON document; every CLI flag overrides exactly one field.
struct ExperimentConfig {
  std::string backend = "synth";  // synth | toy | external
  std::uint64_t seed = 0;
  std::string out = "run";
  std::vector<mcts::RunMode> modes = {mcts::RunMode::Joint};
  int sample_size = 500;
  int generate_count = 0;  // instances `generate` writes; 0 -> sample_size
  std::string dataset_name = "dataset";
  std::string dataset_path;  // empty -> <out>/dataset.jsonl
  int workers = 0;           // 0 -> all available; COLA_WORKERS overrides
  std::int64_t oracle_node_budget = 50'000'000;
  int oracle_max_layers = 10;
  mcts::SearchConfig search;  // .seed/.mode filled per run
  SynthParams synth;
  ToyParams toy;
  ExternalParams external;
};

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> out;
  std::optional<std::string> backend;
  std::optional<std::string> server;
};

// Missing path -> defaults; unknown keys, bad types, or out-of-range values
// -> ConfigError. Overrides apply after the file.
ExperimentConfig load_config(const std::optional<std::string>& config_path,
                             const CliOverrides& overrides);
ExperimentConfig config_from_json(const nlohmann::json& j,
                                  const CliOverrides& overrides);
nlohmann::json config_json(const ExperimentConfig& config);

// Commands return the process exit code:
//   0 success, 2 config/schema error (thrown as ConfigError/ParseError),
//   3 backend failure (thrown as BackendError), 4 completed with recorded
//   per-instance failures or exclusions.
int cmd_generate(const ExperimentConfig& config);
int cmd_search(const ExperimentConfig& config);
int cmd_bruteforce(const ExperimentConfig& config);
int cmd_analyze(const ExperimentConfig& config);
int cmd_report(const std::vector<std::string>& run_dirs,
               const std::string& out_dir);

}  // namespace cola::harness
