#pragma once

#include <cstddef>
#include <vector>

#include "attnlab/model/params.hpp"
#include "attnlab/numerics/tensor.hpp"
#include "attnlab/tasks/tasks.hpp"

namespace attnlab {

/// Per-thread scratch and per-example results of Predictor::run.
struct Workspace {
  std::vector<double> scores;      // attention logits (already divided by √D)
  std::vector<double> weights;     // attention weights
  std::vector<double> output_raw;  // O before normalization
  std::vector<double> output;      // O after normalization
  std::vector<double> class_logits;
  double inv_temp = 1.0;

  std::vector<double> query_proj, key_dir, value_scores, value_mass, pooled, projected, hidden;
};

/// Tape-free forward pass for evaluation and probing. Work per item is O(D)
/// (one dot product and one axpy over the key embedding) instead of the
/// O(D²) of projecting every item, so long sequences stay cheap. Immutable
/// after construction; share across threads with one Workspace each.
class Predictor {
 public:
  explicit Predictor(const ModelParams& params);

  const ModelParams& params() const { return params_; }

  /// Runs example `b` of `batch`. Fills every Workspace result field.
  void run(const TaskBatch& batch, std::size_t b, const TempMode& temp, Workspace& ws) const;

  /// argmax of the class logits for example `b`.
  int predict(const TaskBatch& batch, std::size_t b, const TempMode& temp, Workspace& ws) const;

  /// Class logits for every example, B×C_V.
  Tensor logits(const TaskBatch& batch, const TempMode& temp) const;

 private:
  void query_direction(const TaskBatch& batch, std::size_t b, Workspace& ws) const;

  const ModelParams& params_;
  Tensor w_key_t_;
  // argmax queries are input-independent: precomputed attention logits per
  // priority class and per value class.
  std::vector<double> argmax_key_scores_;
  std::vector<double> argmax_value_scores_;
};

}  // namespace attnlab
