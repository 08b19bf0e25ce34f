#pragma once

#include <string>
#include <utility>
#include <vector>

#include "attnlab/model/config.hpp"
#include "attnlab/numerics/tensor.hpp"
#include "attnlab/util/rng.hpp"

namespace attnlab {

/// Weights of the single-head attention model. Items are the concatenation
/// key_embedding[key] ‖ value_embedding[value]; the query is
/// key_embedding[query] ‖ 0 for dictionary lookup and the learned
/// query_vector for argmax.
struct ModelParams {
  ModelConfig config;
  Tensor w_query;          // D×D
  Tensor w_key;            // D×D
  Tensor w_value;          // D×D
  Tensor w_out;            // D×D
  Tensor gamma;            // D, layernorm only
  Tensor beta;             // D, layernorm only
  Tensor key_embedding;    // C_K×D_K
  Tensor value_embedding;  // C_V×D_V
  Tensor query_vector;     // 1×D, argmax only
  Tensor mlp_hidden;       // D×H
  Tensor mlp_hidden_bias;  // H
  Tensor mlp_out;          // H×C_V

  /// Matrices ~ U(±1/√fan_in), embeddings ~ N(0, 1/√dim), bias 0, γ=1, β=0.
  static ModelParams init(const ModelConfig& config, Rng& rng);

  /// Present tensors in a fixed order, keyed by stable names.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  std::vector<Tensor*> tensors();

  void zero_grad();
};

}  // namespace attnlab
