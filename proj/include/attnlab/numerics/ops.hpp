#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "attnlab/numerics/tape.hpp"
#include "attnlab/numerics/tensor.hpp"

namespace attnlab::ops {

// Plain tensor arithmetic (no tape).

/// a[m×k] · b[k×n]. Throws DimensionError naming both shapes on mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Row-wise exp(inv_temp·(r − max r)) / Σ. Throws NumericInputError on
/// non-finite logits and ContractError when inv_temp <= 0.
Tensor softmax_rows(const Tensor& logits, double inv_temp = 1.0);
/// Row-wise (x − μ)/(σ + eps) with population σ over the row.
Tensor standardize_rows(const Tensor& x, double eps);
/// Shannon entropy (nats) of a probability vector.
double entropy(std::span<const double> p);

// Differentiable ops recorded on the tape of their inputs.

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
/// a[m×n] + bias[n] broadcast over rows.
Var add_row(const Var& a, const Var& bias);
/// a[m×n] ⊙ g[n] broadcast over rows.
Var mul_row(const Var& a, const Var& g);
Var relu(const Var& a);
Var sum(const Var& a);
/// table[C×d] rows at `indices` → [len×d]; gradient scatter-adds.
Var gather_rows(const Var& table, std::span<const int> indices);
Var concat_cols(const Var& a, const Var& b);
/// a[1×d] → [count×d]
Var repeat_rows(const Var& a, std::size_t count);
Var softmax_rows(const Var& logits, double inv_temp = 1.0);
Var standardize_rows(const Var& x, double eps);
/// scores[b, n] = items[b·N + n] · queries[b] for items[(B·N)×D], queries[B×D].
Var batched_scores(const Var& items, const Var& queries);
/// out[b] = Σ_n weights[b, n] · items[b·N + n] for weights[B×N], items[(B·N)×D].
Var batched_weighted_sum(const Var& weights, const Var& items);
/// Mean over rows of −log softmax(logits)[target].
Var cross_entropy_mean(const Var& logits, std::span<const int> targets);

}  // namespace attnlab::ops
