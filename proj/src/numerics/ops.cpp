#include "attnlab/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attnlab/simd/kernels.hpp"
#include "attnlab/util/error.hpp"

namespace attnlab::ops {
namespace {

const simd::KernelTable& K() { return simd::kernels(); }

void require_rank2(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(what) + " expects a rank-2 tensor, got " +
                         shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

void matmul_into(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  const auto& kt = K();
  const double* pa = a.data().data();
  const auto bd = b.data();
  auto od = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    const auto out_row = od.subspan(i * n, n);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      if (aip != 0.0) kt.axpy(aip, bd.subspan(p * n, n), out_row);
    }
  }
}

void softmax_row(std::span<const double> in, double inv_temp, std::span<double> out) {
  const auto& kt = K();
  const double mx = kt.max(in);
  const double total = kt.exp_shift_sum(in, mx, inv_temp, out);
  const double inv = 1.0 / total;
  for (double& v : out) v *= inv;
}

void check_finite(const Tensor& t, const char* what) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) throw NumericInputError(std::string(what) + ": non-finite input");
  }
}

struct RowStats {
  double mean;
  double sigma;
};

RowStats row_stats(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= n;
  double var = 0.0;
  for (double v : x) var += (v - mu) * (v - mu);
  return {mu, std::sqrt(var / n)};
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ for " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()));
  }
  Tensor out({a.rows(), b.cols()});
  matmul_into(a, b, out);
  return out;
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  Tensor out({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Tensor softmax_rows(const Tensor& logits, double inv_temp) {
  if (!(inv_temp > 0.0)) throw ContractError("softmax_rows: inv_temp must be positive");
  check_finite(logits, "softmax_rows");
  Tensor out(logits.shape());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    softmax_row(logits.row_span(r), inv_temp, out.row_span(r));
  }
  return out;
}

Tensor standardize_rows(const Tensor& x, double eps) {
  Tensor out(x.shape());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row_span(r);
    const auto st = row_stats(in);
    auto o = out.row_span(r);
    const double inv = 1.0 / (st.sigma + eps);
    for (std::size_t j = 0; j < in.size(); ++j) o[j] = (in[j] - st.mean) * inv;
  }
  return out;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

Var matmul(const Var& a, const Var& b) {
  Tape& tape = a.tape();
  Tensor out = matmul(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    const auto g = t.grad(self);
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    const auto& kt = K();
    const auto bd = bv.data();
    const double* pa = av.data().data();
    if (t.requires_grad(ia)) {
      auto ga = t.grad(ia);
      for (std::size_t i = 0; i < m; ++i) {
        const auto gi = g.subspan(i * n, n);
        for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += kt.dot(gi, bd.subspan(p * n, n));
      }
    }
    if (t.requires_grad(ib)) {
      auto gb = t.grad(ib);
      for (std::size_t i = 0; i < m; ++i) {
        const auto gi = g.subspan(i * n, n);
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = pa[i * k + p];
          if (aip != 0.0) kt.axpy(aip, gi, gb.subspan(p * n, n));
        }
      }
    }
  });
}

Var transpose(const Var& a) {
  Tape& tape = a.tape();
  const std::size_t ia = a.id();
  return tape.record(transpose(a.value()), {ia}, [ia](Tape& t, std::size_t self) {
    const Tensor& av = t.value(ia);
    const auto g = t.grad(self);
    auto ga = t.grad(ia);
    const std::size_t r = av.rows(), c = av.cols();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j * r + i];
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out.drop_grad();
  const auto bv = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    for (auto id : {ia, ib}) {
      if (!t.requires_grad(id)) continue;
      auto gi = t.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out(a.value().shape());
  const auto av = a.value().data();
  const auto bv = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] * bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    const auto av = t.value(ia).data();
    const auto bv = t.value(ib).data();
    if (t.requires_grad(ia)) {
      auto ga = t.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(ib)) {
      auto gb = t.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(const Var& a, double c) {
  Tensor out(a.value().shape());
  const auto av = a.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = c * av[i];
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia, c](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    auto ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

Var add_row(const Var& a, const Var& bias) {
  const Tensor& av = a.value();
  require_rank2(av, "add_row");
  const std::size_t r = av.rows(), c = av.cols();
  if (bias.value().size() != c) {
    throw DimensionError("add_row: bias " + shape_string(bias.value().shape()) +
                         " does not match " + shape_string(av.shape()));
  }
  Tensor out({r, c});
  const auto bv = bias.value().data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) = av.at(i, j) + bv[j];
  const std::size_t ia = a.id(), ib = bias.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib, r, c](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    if (t.requires_grad(ia)) {
      auto ga = t.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      auto gb = t.grad(ib);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
    }
  });
}

Var mul_row(const Var& a, const Var& gain) {
  const Tensor& av = a.value();
  require_rank2(av, "mul_row");
  const std::size_t r = av.rows(), c = av.cols();
  if (gain.value().size() != c) {
    throw DimensionError("mul_row: gain " + shape_string(gain.value().shape()) +
                         " does not match " + shape_string(av.shape()));
  }
  Tensor out({r, c});
  const auto gv = gain.value().data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) = av.at(i, j) * gv[j];
  const std::size_t ia = a.id(), ig = gain.id();
  return a.tape().record(std::move(out), {ia, ig}, [ia, ig, r, c](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    const auto av = t.value(ia).data();
    const auto gv = t.value(ig).data();
    if (t.requires_grad(ia)) {
      auto ga = t.grad(ia);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[i * c + j] * gv[j];
    }
    if (t.requires_grad(ig)) {
      auto gg = t.grad(ig);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gg[j] += g[i * c + j] * av[i * c + j];
    }
  });
}

Var relu(const Var& a) {
  Tensor out(a.value().shape());
  const auto av = a.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] > 0.0 ? av[i] : 0.0;
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    const auto av = t.value(ia).data();
    auto ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (av[i] > 0.0) ga[i] += g[i];
    }
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id();
  return a.tape().record(Tensor::scalar(s), {ia}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (double& v : t.grad(ia)) v += g;
  });
}

Var gather_rows(const Var& table, std::span<const int> indices) {
  const Tensor& tv = table.value();
  require_rank2(tv, "gather_rows");
  const std::size_t c = tv.rows(), d = tv.cols();
  Tensor out({indices.size(), d});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || static_cast<std::size_t>(idx) >= c) {
      throw ContractError("gather_rows: index " + std::to_string(idx) + " outside table of " +
                          std::to_string(c) + " rows");
    }
    std::copy_n(tv.row_span(idx).begin(), d, out.row_span(i).begin());
  }
  const std::size_t it = table.id();
  std::vector<int> idx(indices.begin(), indices.end());
  return table.tape().record(
      std::move(out), {it}, [it, d, idx = std::move(idx)](Tape& t, std::size_t self) {
        const auto g = t.grad(self);
        auto gt = t.grad(it);
        const auto& kt = K();
        for (std::size_t i = 0; i < idx.size(); ++i) {
          kt.axpy(1.0, g.subspan(i * d, d), gt.subspan(static_cast<std::size_t>(idx[i]) * d, d));
        }
      });
}

Var concat_cols(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "concat_cols");
  require_rank2(bv, "concat_cols");
  if (av.rows() != bv.rows()) {
    throw DimensionError("concat_cols: row counts differ for " + shape_string(av.shape()) +
                         " and " + shape_string(bv.shape()));
  }
  const std::size_t r = av.rows(), p = av.cols(), q = bv.cols();
  Tensor out({r, p + q});
  for (std::size_t i = 0; i < r; ++i) {
    auto o = out.row_span(i);
    std::copy_n(av.row_span(i).begin(), p, o.begin());
    std::copy_n(bv.row_span(i).begin(), q, o.begin() + static_cast<std::ptrdiff_t>(p));
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib, r, p, q](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    if (t.requires_grad(ia)) {
      auto ga = t.grad(ia);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < p; ++j) ga[i * p + j] += g[i * (p + q) + j];
    }
    if (t.requires_grad(ib)) {
      auto gb = t.grad(ib);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < q; ++j) gb[i * q + j] += g[i * (p + q) + p + j];
    }
  });
}

Var repeat_rows(const Var& a, std::size_t count) {
  const Tensor& av = a.value();
  if (av.rows() != 1) {
    throw DimensionError("repeat_rows expects a single row, got " + shape_string(av.shape()));
  }
  const std::size_t d = av.cols();
  Tensor out({count, d});
  for (std::size_t i = 0; i < count; ++i) std::copy_n(av.data().begin(), d, out.row_span(i).begin());
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia, count, d](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    auto ga = t.grad(ia);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = 0; j < d; ++j) ga[j] += g[i * d + j];
  });
}

Var softmax_rows(const Var& logits, double inv_temp) {
  Tensor out = softmax_rows(logits.value(), inv_temp);
  const std::size_t il = logits.id();
  return logits.tape().record(std::move(out), {il}, [il, inv_temp](Tape& t, std::size_t self) {
    const Tensor& y = t.value(self);
    const auto g = t.grad(self);
    auto gl = t.grad(il);
    const std::size_t r = y.rows(), c = y.cols();
    for (std::size_t i = 0; i < r; ++i) {
      const auto yi = y.row_span(i);
      const auto gi = g.subspan(i * c, c);
      double dotp = 0.0;
      for (std::size_t j = 0; j < c; ++j) dotp += gi[j] * yi[j];
      for (std::size_t j = 0; j < c; ++j) gl[i * c + j] += inv_temp * yi[j] * (gi[j] - dotp);
    }
  });
}

Var standardize_rows(const Var& x, double eps) {
  const Tensor& xv = x.value();
  require_rank2(xv, "standardize_rows");
  Tensor out = standardize_rows(xv, eps);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, eps](Tape& t, std::size_t self) {
    const Tensor& xv = t.value(ix);
    const auto g = t.grad(self);
    auto gx = t.grad(ix);
    const std::size_t r = xv.rows(), c = xv.cols();
    const double n = static_cast<double>(c);
    for (std::size_t i = 0; i < r; ++i) {
      const auto xi = xv.row_span(i);
      const auto gi = g.subspan(i * c, c);
      const auto st = row_stats(xi);
      const double s = st.sigma + eps;
      double g_mean = 0.0, g_dot_c = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        g_mean += gi[j];
        g_dot_c += gi[j] * (xi[j] - st.mean);
      }
      g_mean /= n;
      const double sigma_term = st.sigma > 0.0 ? g_dot_c / (n * st.sigma * s * s) : 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        gx[i * c + j] += (gi[j] - g_mean) / s - (xi[j] - st.mean) * sigma_term;
      }
    }
  });
}

Var batched_scores(const Var& items, const Var& queries) {
  const Tensor& xv = items.value();
  const Tensor& uv = queries.value();
  require_rank2(xv, "batched_scores");
  require_rank2(uv, "batched_scores");
  const std::size_t b = uv.rows(), d = uv.cols();
  if (xv.cols() != d || b == 0 || xv.rows() % b != 0) {
    throw DimensionError("batched_scores: items " + shape_string(xv.shape()) +
                         " incompatible with queries " + shape_string(uv.shape()));
  }
  const std::size_t n = xv.rows() / b;
  Tensor out({b, n});
  const auto& kt = K();
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = kt.dot(xv.row_span(i * n + j), uv.row_span(i));
  const std::size_t ix = items.id(), iu = queries.id();
  return items.tape().record(std::move(out), {ix, iu}, [ix, iu, b, n, d](Tape& t, std::size_t self) {
    const Tensor& xv = t.value(ix);
    const Tensor& uv = t.value(iu);
    const auto g = t.grad(self);
    const auto& kt = K();
    if (t.requires_grad(ix)) {
      auto gx = t.grad(ix);
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < n; ++j)
          kt.axpy(g[i * n + j], uv.row_span(i), gx.subspan((i * n + j) * d, d));
    }
    if (t.requires_grad(iu)) {
      auto gu = t.grad(iu);
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < n; ++j)
          kt.axpy(g[i * n + j], xv.row_span(i * n + j), gu.subspan(i * d, d));
    }
  });
}

Var batched_weighted_sum(const Var& weights, const Var& items) {
  const Tensor& av = weights.value();
  const Tensor& xv = items.value();
  require_rank2(av, "batched_weighted_sum");
  require_rank2(xv, "batched_weighted_sum");
  const std::size_t b = av.rows(), n = av.cols(), d = xv.cols();
  if (xv.rows() != b * n) {
    throw DimensionError("batched_weighted_sum: weights " + shape_string(av.shape()) +
                         " incompatible with items " + shape_string(xv.shape()));
  }
  Tensor out({b, d});
  const auto& kt = K();
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < n; ++j) kt.axpy(av.at(i, j), xv.row_span(i * n + j), out.row_span(i));
  const std::size_t ia = weights.id(), ix = items.id();
  return weights.tape().record(std::move(out), {ia, ix}, [ia, ix, b, n, d](Tape& t, std::size_t self) {
    const Tensor& av = t.value(ia);
    const Tensor& xv = t.value(ix);
    const auto g = t.grad(self);
    const auto& kt = K();
    if (t.requires_grad(ia)) {
      auto ga = t.grad(ia);
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < n; ++j)
          ga[i * n + j] += kt.dot(g.subspan(i * d, d), xv.row_span(i * n + j));
    }
    if (t.requires_grad(ix)) {
      auto gx = t.grad(ix);
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < n; ++j)
          kt.axpy(av.at(i, j), g.subspan(i * d, d), gx.subspan((i * n + j) * d, d));
    }
  });
}

Var cross_entropy_mean(const Var& logits, std::span<const int> targets) {
  const Tensor& lv = logits.value();
  require_rank2(lv, "cross_entropy_mean");
  const std::size_t b = lv.rows(), c = lv.cols();
  if (targets.size() != b) {
    throw DimensionError("cross_entropy_mean: " + std::to_string(targets.size()) +
                         " targets for logits " + shape_string(lv.shape()));
  }
  Tensor probs = softmax_rows(lv, 1.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const int y = targets[i];
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw ContractError("cross_entropy_mean: target " + std::to_string(y) + " out of range");
    }
    const auto row = lv.row_span(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - mx);
    loss += (mx + std::log(s)) - row[static_cast<std::size_t>(y)];
  }
  loss /= static_cast<double>(b);
  const std::size_t il = logits.id();
  std::vector<int> tg(targets.begin(), targets.end());
  return logits.tape().record(
      Tensor::scalar(loss), {il},
      [il, b, c, tg = std::move(tg), probs = std::move(probs)](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0] / static_cast<double>(b);
        auto gl = t.grad(il);
        for (std::size_t i = 0; i < b; ++i) {
          for (std::size_t j = 0; j < c; ++j) gl[i * c + j] += g * probs.at(i, j);
          gl[i * c + static_cast<std::size_t>(tg[i])] -= g;
        }
      });
}

}  // namespace attnlab::ops
