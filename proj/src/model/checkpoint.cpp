#include "attnlab/model/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "attnlab/util/csv.hpp"
#include "attnlab/util/error.hpp"

namespace attnlab {

nlohmann::ordered_json model_config_to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["task"] = std::string(task_name(cfg.task));
  j["model_dim"] = cfg.model_dim;
  j["key_dim"] = cfg.key_dim;
  j["hidden_dim"] = cfg.hidden_dim;
  j["key_classes"] = cfg.key_classes;
  j["value_classes"] = cfg.value_classes;
  j["norm_mode"] = std::string(norm_name(cfg.norm));
  j["norm_eps"] = cfg.norm_eps;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::ordered_json& j) {
  ModelConfig cfg;
  cfg.task = parse_task(j.at("task").get<std::string>());
  cfg.model_dim = j.at("model_dim").get<int>();
  cfg.key_dim = j.at("key_dim").get<int>();
  cfg.hidden_dim = j.at("hidden_dim").get<int>();
  cfg.key_classes = j.at("key_classes").get<int>();
  cfg.value_classes = j.at("value_classes").get<int>();
  cfg.norm = parse_norm(j.at("norm_mode").get<std::string>());
  cfg.norm_eps = j.at("norm_eps").get<double>();
  cfg.validate();
  return cfg;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  std::ostringstream os;
  os << "{\"config\":" << ckpt.run_config.dump()
     << ",\"model\":" << model_config_to_json(ckpt.params.config).dump()
     << ",\"step\":" << ckpt.step << ",\"final_loss\":" << csv::format_double(ckpt.final_loss)
     << ",\"reference_entropy\":" << csv::format_double(ckpt.reference_entropy)
     << ",\"params\":[";
  bool first = true;
  for (const auto& [name, t] : ckpt.params.named()) {
    if (!first) os << ',';
    first = false;
    os << "{\"name\":\"" << name << "\",\"shape\":[";
    for (std::size_t i = 0; i < t->shape().size(); ++i) os << (i ? "," : "") << t->shape()[i];
    os << "],\"data\":[";
    const auto data = t->data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (i) os << ',';
      os << csv::format_double(data[i]);
    }
    os << "]}";
  }
  os << "]}\n";
  return os.str();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  const auto j = nlohmann::ordered_json::parse(text);
  Checkpoint ckpt;
  ckpt.run_config = j.at("config");
  ckpt.step = j.at("step").get<std::int64_t>();
  ckpt.final_loss = j.at("final_loss").get<double>();
  ckpt.reference_entropy = j.at("reference_entropy").get<double>();
  ckpt.params.config = model_config_from_json(j.at("model"));
  auto named = ckpt.params.named();
  // Optional tensors are absent from named() until given a shape.
  const auto& entries = j.at("params");
  for (const auto& entry : entries) {
    const auto name = entry.at("name").get<std::string>();
    Tensor* target = nullptr;
    if (name == "gamma") target = &ckpt.params.gamma;
    else if (name == "beta") target = &ckpt.params.beta;
    else if (name == "query_vector") target = &ckpt.params.query_vector;
    for (auto& [n, t] : named) {
      if (n == name) target = t;
    }
    if (!target) throw ConfigError("checkpoint: unknown parameter " + name);
    *target = Tensor(entry.at("shape").get<Shape>(), entry.at("data").get<std::vector<double>>());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace attnlab
