#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "attnlab/model/params.hpp"

namespace attnlab {

struct Checkpoint {
  nlohmann::ordered_json run_config = nlohmann::ordered_json::object();
  std::int64_t step = 0;
  double final_loss = 0.0;
  double reference_entropy = 0.0;
  ModelParams params;
};

/// Single JSON document: {config, model, step, final_loss, reference_entropy,
/// params:[{name, shape, data}]}. Keys are emitted in that fixed order and
/// every float with 17 significant digits.
std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::ordered_json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::ordered_json& j);

}  // namespace attnlab
