#include "attnlab/model/forward.hpp"

#include <cmath>

#include "attnlab/numerics/ops.hpp"
#include "attnlab/util/error.hpp"

namespace attnlab {

ModelVars bind(Tape& tape, ModelParams& p) {
  ModelVars v;
  v.w_query = tape.parameter(p.w_query);
  v.w_key = tape.parameter(p.w_key);
  v.w_value = tape.parameter(p.w_value);
  v.w_out = tape.parameter(p.w_out);
  if (p.gamma.size()) v.gamma = tape.parameter(p.gamma);
  if (p.beta.size()) v.beta = tape.parameter(p.beta);
  v.key_embedding = tape.parameter(p.key_embedding);
  v.value_embedding = tape.parameter(p.value_embedding);
  if (p.query_vector.size()) v.query_vector = tape.parameter(p.query_vector);
  v.mlp_hidden = tape.parameter(p.mlp_hidden);
  v.mlp_hidden_bias = tape.parameter(p.mlp_hidden_bias);
  v.mlp_out = tape.parameter(p.mlp_out);
  return v;
}

ForwardGraph forward_graph(const ModelVars& vars, const ModelConfig& config,
                           const TaskBatch& batch) {
  if (batch.length == 0) throw EmptySequenceError("forward: empty input sequences");
  if (batch.batch == 0) throw ContractError("forward: empty batch");
  Tape& tape = vars.w_query.tape();
  const auto b = batch.batch;
  const auto d = static_cast<std::size_t>(config.model_dim);

  const Var items = ops::concat_cols(ops::gather_rows(vars.key_embedding, batch.keys),
                                     ops::gather_rows(vars.value_embedding, batch.values));
  Var queries;
  if (config.task == TaskKind::dict) {
    const auto dv = static_cast<std::size_t>(config.value_dim());
    queries = ops::concat_cols(ops::gather_rows(vars.key_embedding, batch.queries),
                               tape.constant(Tensor({b, dv}, 0.0)));
  } else {
    if (!vars.query_vector) throw ContractError("argmax model has no query vector");
    queries = ops::repeat_rows(*vars.query_vector, b);
  }

  // (Y W_Q)(X W_K)ᵀ = X (Y W_Q W_Kᵀ)ᵀ row by row; likewise A (X W_V) = (A X) W_V.
  const Var q = ops::matmul(queries, vars.w_query);
  const Var u = ops::matmul(q, ops::transpose(vars.w_key));
  const Var scores = ops::scale(ops::batched_scores(items, u), 1.0 / std::sqrt(static_cast<double>(d)));
  const Var weights = ops::softmax_rows(scores, 1.0);
  const Var pooled = ops::batched_weighted_sum(weights, items);
  Var output = ops::matmul(pooled, vars.w_value);

  switch (config.norm) {
    case NormMode::none: break;
    case NormMode::standardize: output = ops::standardize_rows(output, config.norm_eps); break;
    case NormMode::layernorm:
      if (!vars.gamma || !vars.beta) throw ContractError("layernorm model lacks gamma/beta");
      output = ops::add_row(ops::mul_row(ops::standardize_rows(output, config.norm_eps), *vars.gamma),
                            *vars.beta);
      break;
  }

  const Var projected = ops::matmul(output, vars.w_out);
  const Var hidden = ops::relu(ops::add_row(ops::matmul(projected, vars.mlp_hidden), vars.mlp_hidden_bias));
  const Var logits = ops::matmul(hidden, vars.mlp_out);
  return {weights, output, logits};
}

}  // namespace attnlab
