#include "attnlab/harness/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "attnlab/util/error.hpp"

namespace attnlab {

std::int64_t default_steps(TaskKind task) { return task == TaskKind::argmax ? 100000 : 10000; }

std::vector<int> default_eval_lengths() {
  std::vector<int> out;
  for (int e = 4; e <= 14; ++e) out.push_back(1 << e);
  return out;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.task = task;
  m.model_dim = model_dim;
  m.key_dim = key_dim;
  m.hidden_dim = hidden_dim;
  m.key_classes = key_classes;
  m.value_classes = value_classes;
  m.norm = norm_mode;
  m.norm_eps = norm_eps;
  return m;
}

TaskConfig RunConfig::task_config() const {
  TaskConfig t;
  t.task = task;
  t.key_classes = key_classes;
  t.value_classes = value_classes;
  t.train_max_len = curriculum ? curriculum_max_len : train_max_len;
  return t;
}

AdamConfig RunConfig::adam_config() const {
  return {learning_rate, adam_beta1, adam_beta2, adam_eps};
}

void RunConfig::validate() const {
  model_config().validate();
  task_config().validate();
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (eval_examples < 0) throw ConfigError("eval_examples must be >= 0");
  if (curriculum && curriculum_max_len < train_max_len) {
    throw ConfigError("curriculum_max_len must be >= train_max_len");
  }
  if (!std::is_sorted(eval_lengths.begin(), eval_lengths.end())) {
    throw ConfigError("eval_lengths must be sorted ascending");
  }
  for (int n : eval_lengths) {
    if (n < 1 || n > key_classes) {
      throw ConfigError("eval length " + std::to_string(n) + " outside [1, key_classes]");
    }
  }
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["task"] = std::string(task_name(c.task));
  j["key_classes"] = c.key_classes;
  j["value_classes"] = c.value_classes;
  j["train_max_len"] = c.train_max_len;
  j["norm_mode"] = std::string(norm_name(c.norm_mode));
  j["adaptive"] = c.adaptive;
  j["steps"] = c.steps;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  j["curriculum"] = c.curriculum;
  j["curriculum_max_len"] = c.curriculum_max_len;
  j["eval_lengths"] = c.eval_lengths;
  j["eval_examples"] = c.eval_examples;
  j["seed"] = c.seed;
  j["model_dim"] = c.model_dim;
  j["key_dim"] = c.key_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["norm_eps"] = c.norm_eps;
  return j;
}

RunConfig run_config_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  const RunConfig defaults;
  const auto known = to_json(defaults);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key: " + key);
  }
  RunConfig c;
  try {
    if (j.contains("task")) c.task = parse_task(j.at("task").get<std::string>());
    c.steps = default_steps(c.task);
    auto get = [&j](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("key_classes", c.key_classes);
    get("value_classes", c.value_classes);
    get("train_max_len", c.train_max_len);
    if (j.contains("norm_mode")) c.norm_mode = parse_norm(j.at("norm_mode").get<std::string>());
    get("adaptive", c.adaptive);
    get("steps", c.steps);
    get("batch_size", c.batch_size);
    get("learning_rate", c.learning_rate);
    get("adam_beta1", c.adam_beta1);
    get("adam_beta2", c.adam_beta2);
    get("adam_eps", c.adam_eps);
    get("curriculum", c.curriculum);
    get("curriculum_max_len", c.curriculum_max_len);
    get("eval_lengths", c.eval_lengths);
    get("eval_examples", c.eval_examples);
    get("seed", c.seed);
    get("model_dim", c.model_dim);
    get("key_dim", c.key_dim);
    get("hidden_dim", c.hidden_dim);
    get("norm_eps", c.norm_eps);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    return run_config_from_json(nlohmann::ordered_json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key=value: " + assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  auto j = to_json(cfg);
  if (!j.contains(key)) throw ConfigError("unknown config key: " + key);
  nlohmann::ordered_json value;
  try {
    value = nlohmann::ordered_json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  j[key] = value;
  cfg = run_config_from_json(j);
}

}  // namespace attnlab
