#include "attnlab/model/params.hpp"

#include <cmath>

namespace attnlab {
namespace {

Tensor uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t({rows, cols});
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Tensor normal_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(cols)));
  Tensor t({rows, cols});
  for (double& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, Rng& rng) {
  config.validate();
  const auto d = static_cast<std::size_t>(config.model_dim);
  const auto dk = static_cast<std::size_t>(config.key_dim);
  const auto dv = static_cast<std::size_t>(config.value_dim());
  const auto h = static_cast<std::size_t>(config.hidden_dim);
  const auto ck = static_cast<std::size_t>(config.key_classes);
  const auto cv = static_cast<std::size_t>(config.value_classes);

  ModelParams p;
  p.config = config;
  p.w_query = uniform_matrix(d, d, rng);
  p.w_key = uniform_matrix(d, d, rng);
  p.w_value = uniform_matrix(d, d, rng);
  p.w_out = uniform_matrix(d, d, rng);
  if (config.norm == NormMode::layernorm) {
    p.gamma = Tensor({d}, 1.0);
    p.beta = Tensor({d}, 0.0);
  }
  p.key_embedding = normal_matrix(ck, dk, rng);
  p.value_embedding = normal_matrix(cv, dv, rng);
  if (config.task == TaskKind::argmax) p.query_vector = normal_matrix(1, d, rng);
  p.mlp_hidden = uniform_matrix(d, h, rng);
  p.mlp_hidden_bias = Tensor({h}, 0.0);
  p.mlp_out = uniform_matrix(h, cv, rng);
  return p;
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out{
      {"w_query", &w_query}, {"w_key", &w_key}, {"w_value", &w_value}, {"w_out", &w_out}};
  if (gamma.size()) out.emplace_back("gamma", &gamma);
  if (beta.size()) out.emplace_back("beta", &beta);
  out.emplace_back("key_embedding", &key_embedding);
  out.emplace_back("value_embedding", &value_embedding);
  if (query_vector.size()) out.emplace_back("query_vector", &query_vector);
  out.emplace_back("mlp_hidden", &mlp_hidden);
  out.emplace_back("mlp_hidden_bias", &mlp_hidden_bias);
  out.emplace_back("mlp_out", &mlp_out);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<ModelParams*>(this)->named()) out.emplace_back(name, t);
  return out;
}

std::vector<Tensor*> ModelParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

void ModelParams::zero_grad() {
  for (Tensor* t : tensors()) t->zero_grad();
}

}  // namespace attnlab
