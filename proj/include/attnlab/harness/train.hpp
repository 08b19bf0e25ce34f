#pragma once

#include <cstdint>
#include <functional>

#include "attnlab/harness/run_config.hpp"
#include "attnlab/model/checkpoint.hpp"

namespace attnlab {

/// Maximum training length at `step`: rises log-linearly from n_max_start to
/// n_max_end over the first half of training and stays at n_max_end after.
int curriculum_len(std::int64_t step, std::int64_t steps_total, int n_max_start = 16,
                   int n_max_end = 256);

struct TrainProgress {
  std::int64_t step;
  double loss;
};

using ProgressFn = std::function<void(const TrainProgress&)>;

/// Runs cfg.steps Adam updates on mean cross-entropy over freshly sampled
/// batches. Deterministic in cfg (including cfg.seed). The checkpoint's
/// reference_entropy is the mean attention entropy over the last
/// min(steps, 1000) steps. Throws DivergedError on a non-finite loss.
Checkpoint train(const RunConfig& cfg, const ProgressFn& progress = {},
                 std::int64_t progress_every = 500);

}  // namespace attnlab
