#include "attnlab/model/config.hpp"

#include "attnlab/util/error.hpp"

namespace attnlab {

std::string_view norm_name(NormMode mode) {
  switch (mode) {
    case NormMode::none: return "none";
    case NormMode::standardize: return "standardize";
    case NormMode::layernorm: return "layernorm";
  }
  return "none";
}

NormMode parse_norm(std::string_view name) {
  if (name == "none" || name == "baseline") return NormMode::none;
  if (name == "standardize" || name == "std") return NormMode::standardize;
  if (name == "layernorm" || name == "ln") return NormMode::layernorm;
  throw ConfigError("unknown norm mode: " + std::string(name));
}

std::string variant_label(NormMode mode, bool adaptive) {
  std::string base;
  switch (mode) {
    case NormMode::none: base = "baseline"; break;
    case NormMode::standardize: base = "std"; break;
    case NormMode::layernorm: base = "ln"; break;
  }
  return adaptive ? base + "+adaptive" : base;
}

void ModelConfig::validate() const {
  if (model_dim < 1) throw ConfigError("model_dim must be positive");
  if (key_dim < 1 || key_dim >= model_dim) {
    throw ConfigError("key_dim must lie in [1, model_dim)");
  }
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be positive");
  if (key_classes < 1) throw ConfigError("key_classes must be positive");
  if (value_classes < 2) throw ConfigError("value_classes must be >= 2");
  if (!(norm_eps > 0.0)) throw ConfigError("norm_eps must be positive");
  if (norm != NormMode::none && model_dim < 2) {
    throw ConfigError("normalization needs model_dim >= 2");
  }
}

}  // namespace attnlab
