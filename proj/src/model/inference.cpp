#include "attnlab/model/inference.hpp"

#include <algorithm>
#include <cmath>

#include "attnlab/model/attention.hpp"
#include "attnlab/numerics/ops.hpp"
#include "attnlab/simd/kernels.hpp"
#include "attnlab/util/error.hpp"

namespace attnlab {
namespace {

// out = x · W for a row vector x and a row-major W.
void vec_mat(std::span<const double> x, const Tensor& w, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const auto& kt = simd::kernels();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) kt.axpy(x[i], w.row_span(i), out);
  }
}

}  // namespace

Predictor::Predictor(const ModelParams& params)
    : params_(params), w_key_t_(ops::transpose(params.w_key)) {
  const auto& cfg = params_.config;
  if (cfg.task != TaskKind::argmax) return;
  Workspace ws;
  TaskBatch empty;
  empty.task = TaskKind::argmax;
  query_direction(empty, 0, ws);
  const auto dk = static_cast<std::size_t>(cfg.key_dim);
  const auto dv = static_cast<std::size_t>(cfg.value_dim());
  const auto& kt = simd::kernels();
  const std::span<const double> dir(ws.key_dir);
  argmax_key_scores_.resize(static_cast<std::size_t>(cfg.key_classes));
  for (std::size_t c = 0; c < argmax_key_scores_.size(); ++c) {
    argmax_key_scores_[c] = kt.dot(params_.key_embedding.row_span(c), dir.subspan(0, dk));
  }
  argmax_value_scores_.resize(static_cast<std::size_t>(cfg.value_classes));
  for (std::size_t c = 0; c < argmax_value_scores_.size(); ++c) {
    argmax_value_scores_[c] = kt.dot(params_.value_embedding.row_span(c), dir.subspan(dk, dv));
  }
}

// key_dir = (y W_Q) W_Kᵀ / √D, so that the logit of item x is x · key_dir.
void Predictor::query_direction(const TaskBatch& batch, std::size_t b, Workspace& ws) const {
  const auto& cfg = params_.config;
  const auto d = static_cast<std::size_t>(cfg.model_dim);
  const auto dk = static_cast<std::size_t>(cfg.key_dim);
  std::vector<double> y(d, 0.0);
  if (cfg.task == TaskKind::dict) {
    const auto row = params_.key_embedding.row_span(static_cast<std::size_t>(batch.queries[b]));
    std::copy_n(row.begin(), dk, y.begin());
  } else {
    std::copy_n(params_.query_vector.data().begin(), d, y.begin());
  }
  ws.query_proj.resize(d);
  ws.key_dir.resize(d);
  vec_mat(y, params_.w_query, ws.query_proj);
  vec_mat(ws.query_proj, w_key_t_, ws.key_dir);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& v : ws.key_dir) v *= inv_sqrt_d;
}

void Predictor::run(const TaskBatch& batch, std::size_t b, const TempMode& temp,
                    Workspace& ws) const {
  const auto& cfg = params_.config;
  const std::size_t n = batch.length;
  if (n == 0) throw EmptySequenceError("predict: empty input sequence");
  const auto d = static_cast<std::size_t>(cfg.model_dim);
  const auto dk = static_cast<std::size_t>(cfg.key_dim);
  const auto dv = static_cast<std::size_t>(cfg.value_dim());
  const auto cv = static_cast<std::size_t>(cfg.value_classes);
  const auto& kt = simd::kernels();

  const int* keys = batch.keys.data() + b * n;
  const int* values = batch.values.data() + b * n;

  ws.scores.resize(n);
  if (cfg.task == TaskKind::argmax) {
    for (std::size_t j = 0; j < n; ++j) {
      ws.scores[j] = argmax_key_scores_[static_cast<std::size_t>(keys[j])] +
                     argmax_value_scores_[static_cast<std::size_t>(values[j])];
    }
  } else {
    query_direction(batch, b, ws);
    const std::span<const double> dir(ws.key_dir);
    ws.value_scores.resize(cv);
    for (std::size_t c = 0; c < cv; ++c) {
      ws.value_scores[c] = kt.dot(params_.value_embedding.row_span(c), dir.subspan(dk, dv));
    }
    const auto key_dir = dir.subspan(0, dk);
    for (std::size_t j = 0; j < n; ++j) {
      ws.scores[j] = kt.dot(params_.key_embedding.row_span(static_cast<std::size_t>(keys[j])), key_dir) +
                     ws.value_scores[static_cast<std::size_t>(values[j])];
    }
  }

  ws.inv_temp = temp.adaptive ? adaptive_inv_temp(ws.scores, temp.reference_entropy) : 1.0;
  ws.weights.resize(n);
  const double mx = kt.max(ws.scores);
  const double total = kt.exp_shift_sum(ws.scores, mx, ws.inv_temp, ws.weights);
  const double inv_total = 1.0 / total;
  for (double& w : ws.weights) w *= inv_total;

  // pooled = A X, with the value half accumulated per value class.
  ws.pooled.assign(d, 0.0);
  ws.value_mass.assign(cv, 0.0);
  const std::span<double> pooled_keys(ws.pooled.data(), dk);
  for (std::size_t j = 0; j < n; ++j) {
    kt.axpy(ws.weights[j], params_.key_embedding.row_span(static_cast<std::size_t>(keys[j])), pooled_keys);
    ws.value_mass[static_cast<std::size_t>(values[j])] += ws.weights[j];
  }
  const std::span<double> pooled_values(ws.pooled.data() + dk, dv);
  for (std::size_t c = 0; c < cv; ++c) {
    if (ws.value_mass[c] != 0.0) kt.axpy(ws.value_mass[c], params_.value_embedding.row_span(c), pooled_values);
  }

  ws.output_raw.resize(d);
  vec_mat(ws.pooled, params_.w_value, ws.output_raw);

  ws.output = ws.output_raw;
  if (cfg.norm != NormMode::none) {
    double mu = 0.0;
    for (double v : ws.output) mu += v;
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (double v : ws.output) var += (v - mu) * (v - mu);
    const double inv = 1.0 / (std::sqrt(var / static_cast<double>(d)) + cfg.norm_eps);
    for (std::size_t i = 0; i < d; ++i) {
      double z = (ws.output[i] - mu) * inv;
      if (cfg.norm == NormMode::layernorm) z = params_.gamma[i] * z + params_.beta[i];
      ws.output[i] = z;
    }
  }

  const auto h = static_cast<std::size_t>(cfg.hidden_dim);
  ws.projected.resize(d);
  vec_mat(ws.output, params_.w_out, ws.projected);
  ws.hidden.resize(h);
  vec_mat(ws.projected, params_.mlp_hidden, ws.hidden);
  for (std::size_t i = 0; i < h; ++i) {
    const double v = ws.hidden[i] + params_.mlp_hidden_bias[i];
    ws.hidden[i] = v > 0.0 ? v : 0.0;
  }
  ws.class_logits.resize(cv);
  vec_mat(ws.hidden, params_.mlp_out, ws.class_logits);
}

int Predictor::predict(const TaskBatch& batch, std::size_t b, const TempMode& temp,
                       Workspace& ws) const {
  run(batch, b, temp, ws);
  return static_cast<int>(std::max_element(ws.class_logits.begin(), ws.class_logits.end()) -
                          ws.class_logits.begin());
}

Tensor Predictor::logits(const TaskBatch& batch, const TempMode& temp) const {
  const auto cv = static_cast<std::size_t>(params_.config.value_classes);
  Tensor out({batch.batch, cv});
  Workspace ws;
  for (std::size_t b = 0; b < batch.batch; ++b) {
    run(batch, b, temp, ws);
    std::copy(ws.class_logits.begin(), ws.class_logits.end(), out.row_span(b).begin());
  }
  return out;
}

}  // namespace attnlab
