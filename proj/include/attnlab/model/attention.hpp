#pragma once

#include <span>

#include "attnlab/model/params.hpp"
#include "attnlab/numerics/tensor.hpp"

namespace attnlab {

struct Attended {
  Tensor weights;  // A, 1×N
  Tensor output;   // O, 1×D (before normalization and W_O)
  double inv_temp = 1.0;
};

/// A = softmax(β · (y W_Q)(X W_K)ᵀ / √D), O = A (X W_V), with β = 1 for a
/// fixed temperature and β from adaptive_inv_temp otherwise.
/// Throws EmptySequenceError when X has no rows.
Attended attend(const ModelParams& params, const Tensor& items, const Tensor& query,
                const TempMode& temp);

/// none → identity; standardize → (o − μ)/(σ + ε); layernorm → γ ⊙ standardize(o) + β.
/// Throws DegenerateWidthError for D = 1 with a normalizing mode.
Tensor normalize_output(const Tensor& output, NormMode mode, const ModelParams& params);
Tensor normalize_output(const Tensor& output, NormMode mode, const Tensor& gamma,
                        const Tensor& beta, double eps);

/// Shannon entropy of softmax(inv_temp · logits).
double softmax_entropy(std::span<const double> logits, double inv_temp);

/// Inverse temperature in [1, 64] that brings the attention entropy down to
/// `reference_entropy`: 1 when it is already at or below the reference,
/// otherwise 40 bisection steps on [1, 64], clamped at 64.
double adaptive_inv_temp(std::span<const double> logits, double reference_entropy);

inline constexpr double kMaxInvTemp = 64.0;
inline constexpr int kBisectionSteps = 40;

}  // namespace attnlab
