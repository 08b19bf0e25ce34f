#include "attnlab/numerics/adam.hpp"

#include <cmath>
#include <string>

#include "attnlab/simd/kernels.hpp"
#include "attnlab/util/error.hpp"

namespace attnlab {

void adam_step(std::span<Tensor* const> params, AdamState& state) {
  if (state.first_moment.empty() && state.step == 0) {
    for (const Tensor* p : params) {
      state.first_moment.emplace_back(p->size(), 0.0);
      state.second_moment.emplace_back(p->size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ContractError("adam_step: optimizer state tracks " +
                        std::to_string(state.first_moment.size()) + " tensors, got " +
                        std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i]->size()) {
      throw ContractError("adam_step: moment buffer " + std::to_string(i) +
                          " does not match parameter shape " +
                          shape_string(params[i]->shape()));
    }
  }

  state.step += 1;
  const auto& cfg = state.config;
  const double t = static_cast<double>(state.step);
  const simd::AdamCoefficients coeffs{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps,
                                      1.0 - std::pow(cfg.beta1, t), 1.0 - std::pow(cfg.beta2, t)};
  const auto& kt = simd::kernels();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    kt.adam_update(p.data(), p.grad(), state.first_moment[i], state.second_moment[i], coeffs);
  }
}

}  // namespace attnlab
