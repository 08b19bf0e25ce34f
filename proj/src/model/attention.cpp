#include "attnlab/model/attention.hpp"

#include <cmath>
#include <vector>

#include "attnlab/numerics/ops.hpp"
#include "attnlab/simd/kernels.hpp"
#include "attnlab/util/error.hpp"

namespace attnlab {
namespace {

class EntropyCurve {
 public:
  explicit EntropyCurve(std::span<const double> logits)
      : shifted_(logits.size()), exps_(logits.size()) {
    const auto& kt = simd::kernels();
    const double mx = kt.max(logits);
    for (std::size_t i = 0; i < logits.size(); ++i) shifted_[i] = logits[i] - mx;
  }

  double operator()(double inv_temp) {
    const auto& kt = simd::kernels();
    const double total = kt.exp_shift_sum(shifted_, 0.0, inv_temp, exps_);
    const double weighted = kt.dot(exps_, shifted_);
    const double h = std::log(total) - inv_temp * weighted / total;
    return h > 0.0 ? h : 0.0;
  }

 private:
  std::vector<double> shifted_;
  std::vector<double> exps_;
};

}  // namespace

double softmax_entropy(std::span<const double> logits, double inv_temp) {
  if (logits.empty()) return 0.0;
  return EntropyCurve(logits)(inv_temp);
}

double adaptive_inv_temp(std::span<const double> logits, double reference_entropy) {
  if (logits.size() <= 1) return 1.0;
  EntropyCurve entropy(logits);
  if (entropy(1.0) <= reference_entropy) return 1.0;
  if (entropy(kMaxInvTemp) > reference_entropy) return kMaxInvTemp;
  double lo = 1.0, hi = kMaxInvTemp;
  for (int i = 0; i < kBisectionSteps; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (entropy(mid) > reference_entropy) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

Attended attend(const ModelParams& params, const Tensor& items, const Tensor& query,
                const TempMode& temp) {
  const std::size_t n = items.rank() == 2 ? items.rows() : 0;
  if (n == 0) throw EmptySequenceError("attend: empty input sequence");
  const auto d = static_cast<std::size_t>(params.config.model_dim);
  if (items.cols() != d || query.size() != d) {
    throw DimensionError("attend: items " + shape_string(items.shape()) + " / query " +
                         shape_string(query.shape()) + " do not match model width " +
                         std::to_string(d));
  }
  const Tensor y({1, d}, std::vector<double>(query.data().begin(), query.data().end()));
  const Tensor q = ops::matmul(y, params.w_query);
  const Tensor keys = ops::matmul(items, params.w_key);
  const Tensor values = ops::matmul(items, params.w_value);

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor logits({1, n});
  const auto& kt = simd::kernels();
  for (std::size_t j = 0; j < n; ++j) logits[j] = kt.dot(q.data(), keys.row_span(j)) * inv_sqrt_d;

  Attended out;
  out.inv_temp = temp.adaptive ? adaptive_inv_temp(logits.data(), temp.reference_entropy) : 1.0;
  out.weights = ops::softmax_rows(logits, out.inv_temp);
  out.output = ops::matmul(out.weights, values);
  return out;
}

Tensor normalize_output(const Tensor& output, NormMode mode, const Tensor& gamma,
                        const Tensor& beta, double eps) {
  if (mode == NormMode::none) return output;
  if (output.cols() < 2) {
    throw DegenerateWidthError("normalization over a single feature is undefined");
  }
  const Tensor row2 = output.rank() == 2 ? output : Tensor({1, output.size()},
                                                           std::vector<double>(output.data().begin(),
                                                                               output.data().end()));
  Tensor z = ops::standardize_rows(row2, eps);
  if (mode == NormMode::layernorm) {
    const std::size_t c = z.cols();
    for (std::size_t r = 0; r < z.rows(); ++r)
      for (std::size_t j = 0; j < c; ++j) z.at(r, j) = gamma[j] * z.at(r, j) + beta[j];
  }
  return z;
}

Tensor normalize_output(const Tensor& output, NormMode mode, const ModelParams& params) {
  return normalize_output(output, mode, params.gamma, params.beta, params.config.norm_eps);
}

}  // namespace attnlab
