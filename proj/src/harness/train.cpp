#include "attnlab/harness/train.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "attnlab/model/forward.hpp"
#include "attnlab/numerics/ops.hpp"
#include "attnlab/tasks/tasks.hpp"
#include "attnlab/util/error.hpp"
#include "attnlab/util/rng.hpp"

namespace attnlab {

int curriculum_len(std::int64_t step, std::int64_t steps_total, int n_max_start, int n_max_end) {
  const std::int64_t ramp = steps_total / 2;
  if (ramp <= 0 || step >= ramp) return n_max_end;
  if (step <= 0) return n_max_start;
  const double frac = static_cast<double>(step) / static_cast<double>(ramp);
  const double n = n_max_start * std::pow(static_cast<double>(n_max_end) / n_max_start, frac);
  return static_cast<int>(std::lround(n));
}

Checkpoint train(const RunConfig& cfg, const ProgressFn& progress, std::int64_t progress_every) {
  cfg.validate();
  const ModelConfig model_cfg = cfg.model_config();
  const TaskConfig task_cfg = cfg.task_config();

  Rng init_rng = make_stream(cfg.seed, "init");
  Rng data_rng = make_stream(cfg.seed, "train");

  Checkpoint ckpt;
  ckpt.run_config = to_json(cfg);
  ckpt.params = ModelParams::init(model_cfg, init_rng);
  ModelParams& params = ckpt.params;
  auto tensors = params.tensors();
  for (Tensor* t : tensors) t->grad();

  AdamState adam;
  adam.config = cfg.adam_config();

  const std::int64_t entropy_window = std::min<std::int64_t>(cfg.steps, 1000);
  double entropy_sum = 0.0;
  std::int64_t entropy_count = 0;
  double loss_value = 0.0;

  for (std::int64_t step = 0; step < cfg.steps; ++step) {
    const int max_len = cfg.curriculum
                            ? curriculum_len(step, cfg.steps, cfg.train_max_len, cfg.curriculum_max_len)
                            : cfg.train_max_len;
    std::uniform_int_distribution<int> len_dist(1, max_len);
    const auto length = static_cast<std::size_t>(len_dist(data_rng));
    const TaskBatch batch =
        gen_batch(task_cfg, static_cast<std::size_t>(cfg.batch_size), length, data_rng);

    params.zero_grad();
    Tape tape;
    const ModelVars vars = bind(tape, params);
    // Blown-up parameters show up as non-finite scores before the loss exists.
    std::optional<ForwardGraph> forward;
    std::optional<Var> loss_var;
    try {
      forward.emplace(forward_graph(vars, model_cfg, batch));
      loss_var.emplace(ops::cross_entropy_mean(forward->logits, batch.targets));
    } catch (const NumericInputError&) {
      throw DivergedError(step, std::numeric_limits<double>::quiet_NaN());
    }
    const ForwardGraph& graph = *forward;
    const Var& loss = *loss_var;
    loss_value = loss.value()[0];
    if (!std::isfinite(loss_value)) throw DivergedError(step, loss_value);
    tape.backward(loss);
    adam_step(tensors, adam);

    if (step >= cfg.steps - entropy_window) {
      const Tensor& w = graph.weights.value();
      for (std::size_t b = 0; b < w.rows(); ++b) entropy_sum += ops::entropy(w.row_span(b));
      entropy_count += static_cast<std::int64_t>(w.rows());
    }
    if (progress && progress_every > 0 && ((step + 1) % progress_every == 0 || step + 1 == cfg.steps)) {
      progress({step + 1, loss_value});
    }
  }

  for (Tensor* t : tensors) t->drop_grad();
  ckpt.step = cfg.steps;
  ckpt.final_loss = loss_value;
  ckpt.reference_entropy = entropy_count ? entropy_sum / static_cast<double>(entropy_count) : 0.0;
  return ckpt;
}

}  // namespace attnlab
