#pragma once

#include <optional>

#include "attnlab/model/params.hpp"
#include "attnlab/numerics/tape.hpp"
#include "attnlab/tasks/tasks.hpp"

namespace attnlab {

/// ModelParams bound onto a tape as gradient-receiving parameters.
struct ModelVars {
  Var w_query, w_key, w_value, w_out;
  std::optional<Var> gamma, beta;
  Var key_embedding, value_embedding;
  std::optional<Var> query_vector;
  Var mlp_hidden, mlp_hidden_bias, mlp_out;
};

ModelVars bind(Tape& tape, ModelParams& params);

struct ForwardGraph {
  Var weights;  // attention weights, B×N
  Var output;   // attention output after normalization, B×D
  Var logits;   // B×C_V
};

/// Differentiable forward pass at inverse temperature 1: embed items,
/// attend, normalize, W_O, then the ReLU MLP head.
ForwardGraph forward_graph(const ModelVars& vars, const ModelConfig& config,
                           const TaskBatch& batch);

}  // namespace attnlab
