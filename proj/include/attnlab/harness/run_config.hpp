#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attnlab/model/config.hpp"
#include "attnlab/numerics/adam.hpp"
#include "attnlab/tasks/tasks.hpp"

namespace attnlab {

std::int64_t default_steps(TaskKind task);
std::vector<int> default_eval_lengths();

/// One training + evaluation run. JSON keys are exactly the member names.
struct RunConfig {
  TaskKind task = TaskKind::dict;
  int key_classes = 16384;
  int value_classes = 64;
  int train_max_len = 16;
  NormMode norm_mode = NormMode::none;
  bool adaptive = false;
  std::int64_t steps = default_steps(TaskKind::dict);
  int batch_size = 128;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool curriculum = false;
  int curriculum_max_len = 256;
  std::vector<int> eval_lengths = default_eval_lengths();
  int eval_examples = 4096;
  std::uint64_t seed = 0;
  int model_dim = 64;
  int key_dim = 48;
  int hidden_dim = 128;
  double norm_eps = 1e-5;

  ModelConfig model_config() const;
  TaskConfig task_config() const;
  AdamConfig adam_config() const;
  /// Throws ConfigError on any violated constraint.
  void validate() const;
};

nlohmann::ordered_json to_json(const RunConfig& cfg);
/// Missing keys keep their defaults (steps defaults by task); unknown keys
/// are rejected with ConfigError.
RunConfig run_config_from_json(const nlohmann::ordered_json& j);
RunConfig load_run_config(const std::string& path);

/// Applies `key=value`; the value is parsed as JSON when possible and as a
/// bare string otherwise.
void apply_override(RunConfig& cfg, const std::string& assignment);

}  // namespace attnlab
