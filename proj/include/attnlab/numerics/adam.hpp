#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "attnlab/numerics/tensor.hpp"

namespace attnlab {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

/// One bias-corrected Adam update of every tensor in `params` using its
/// gradient buffer (a missing buffer counts as zero). Moment buffers are
/// created on the first call; later calls must pass tensors of the same
/// sizes in the same order or a ContractError is thrown.
void adam_step(std::span<Tensor* const> params, AdamState& state);

}  // namespace attnlab
