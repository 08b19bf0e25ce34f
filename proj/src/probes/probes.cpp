#include "attnlab/probes/probes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "attnlab/model/inference.hpp"
#include "attnlab/numerics/ops.hpp"
#include "attnlab/simd/kernels.hpp"
#include "attnlab/tasks/tasks.hpp"
#include "attnlab/util/error.hpp"

namespace attnlab::probes {
namespace {

constexpr std::size_t kChunk = 256;

TaskConfig task_of(const ModelParams& params) {
  TaskConfig tc;
  tc.task = params.config.task;
  tc.key_classes = params.config.key_classes;
  tc.value_classes = params.config.value_classes;
  return tc;
}

// Calls visit(ws) for each of `n_seqs` fresh sequences of length N.
void for_each_sequence(const ModelParams& params, int length, int n_seqs, Rng& rng,
                       const std::function<void(const Workspace&)>& visit) {
  const Predictor predictor(params);
  const TaskConfig tc = task_of(params);
  Workspace ws;
  for (int done = 0; done < n_seqs;) {
    const auto chunk = static_cast<std::size_t>(std::min<int>(static_cast<int>(kChunk), n_seqs - done));
    const TaskBatch batch = gen_batch(tc, chunk, static_cast<std::size_t>(length), rng);
    for (std::size_t b = 0; b < chunk; ++b) {
      predictor.run(batch, b, TempMode::fixed(), ws);
      visit(ws);
    }
    done += static_cast<int>(chunk);
  }
}

double sample_std(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

}  // namespace

ProbeRecord feature_stats(const ModelParams& params, int length, int n_seqs, Rng& rng,
                          const FeatureStatsOptions& options) {
  if (n_seqs < 2) throw ContractError("feature_stats: need at least two sequences");
  const int d = params.config.model_dim;
  for (int f : options.tracked) {
    if (f < 0 || f >= d) throw ContractError("feature_stats: feature index out of range");
  }
  ProbeRecord rec;
  rec.length = length;
  rec.tracked = options.tracked;
  std::vector<std::vector<double>> samples(options.tracked.size());
  double mean_acc = 0.0, var_acc = 0.0;
  for_each_sequence(params, length, n_seqs, rng, [&](const Workspace& ws) {
    const auto& o = options.pre_norm ? ws.output_raw : ws.output;
    for (std::size_t i = 0; i < options.tracked.size(); ++i) {
      samples[i].push_back(o[static_cast<std::size_t>(options.tracked[i])]);
    }
    double mu = 0.0;
    for (double v : o) mu += v;
    mu /= static_cast<double>(o.size());
    double var = 0.0;
    for (double v : o) var += (v - mu) * (v - mu);
    mean_acc += mu;
    var_acc += var / static_cast<double>(o.size());
  });
  rec.global_mean = mean_acc / n_seqs;
  rec.global_var = var_acc / n_seqs;
  for (const auto& s : samples) rec.feature_std.push_back(sample_std(s));
  if (options.dump_raw) rec.raw = std::move(samples);
  return rec;
}

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  SlopeFit fit;
  std::vector<double> xs, ys;
  for (const auto& [n, sigma] : points) {
    if (!(sigma > 0.0) || !(n > 0.0)) {
      fit.warnings.push_back("excluded point N=" + std::to_string(n) +
                             " sigma=" + std::to_string(sigma) + " (non-positive)");
      continue;
    }
    xs.push_back(std::log(n));
    ys.push_back(std::log(sigma));
  }
  if (xs.size() < 3) {
    throw InsufficientDataError("log-log fit needs >= 3 positive points, have " +
                                std::to_string(xs.size()));
  }
  const double m = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw InsufficientDataError("log-log fit needs at least two distinct N");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.n_points = static_cast<int>(xs.size());
  return fit;
}

Prop1Result verify_prop1(const Prop1Config& cfg, Rng& rng) {
  if (cfg.vocab_size < 1 || cfg.model_dim < 1) throw ContractError("verify_prop1: empty vocabulary or width");
  if (!std::is_sorted(cfg.lengths.begin(), cfg.lengths.end())) {
    throw ContractError("verify_prop1: lengths must be ascending");
  }
  if (cfg.n_seqs < 2) throw ContractError("verify_prop1: need at least two sequences");
  if (cfg.feature < 0 || cfg.feature >= cfg.model_dim) throw ContractError("verify_prop1: feature out of range");
  const auto d = static_cast<std::size_t>(cfg.model_dim);
  const auto vocab = static_cast<std::size_t>(cfg.vocab_size);
  const auto feat = static_cast<std::size_t>(cfg.feature);

  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  std::uniform_real_distribution<double> weight(-bound, bound);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_matrix = [&](std::size_t r, std::size_t c, auto& dist) {
    Tensor t({r, c});
    for (double& v : t.data()) v = dist(rng);
    return t;
  };
  const Tensor w_query = random_matrix(d, d, weight);
  const Tensor w_key = random_matrix(d, d, weight);
  const Tensor w_value = random_matrix(d, d, weight);
  const Tensor tokens = random_matrix(vocab, d, gauss);
  const Tensor query = random_matrix(1, d, gauss);

  const Tensor q = ops::matmul(query, w_query);
  const Tensor keys = ops::matmul(tokens, w_key);
  Tensor values = ops::matmul(tokens, w_value);

  // Center the value vectors so their mean over the uniform vocabulary is 0.
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < vocab; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += values.at(i, j);
  for (double& m : mean) m /= static_cast<double>(vocab);
  for (std::size_t i = 0; i < vocab; ++i)
    for (std::size_t j = 0; j < d; ++j) values.at(i, j) -= mean[j];

  Prop1Result result;
  std::vector<double> centered_mean(d, 0.0), value_var(d, 0.0);
  for (std::size_t i = 0; i < vocab; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      centered_mean[j] += values.at(i, j);
      value_var[j] += values.at(i, j) * values.at(i, j);
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    result.value_mean_max_abs = std::max(result.value_mean_max_abs,
                                         std::abs(centered_mean[j] / static_cast<double>(vocab)));
    result.max_value_variance = std::max(result.max_value_variance,
                                         value_var[j] / static_cast<double>(vocab));
  }

  const auto& kt = simd::kernels();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> token_logit(vocab);
  for (std::size_t i = 0; i < vocab; ++i) token_logit[i] = kt.dot(q.data(), keys.row_span(i)) * inv_sqrt_d;
  std::vector<double> value_feature(vocab);
  for (std::size_t i = 0; i < vocab; ++i) value_feature[i] = values.at(i, feat);

  const double slack = 1.0 + 5.0 / std::sqrt(static_cast<double>(cfg.n_seqs));
  std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
  std::vector<std::pair<double, double>> points;
  for (int length : cfg.lengths) {
    const auto n = static_cast<std::size_t>(length);
    std::vector<double> logits(n), weights(n), outputs;
    std::vector<std::size_t> ids(n);
    double max_weight = 0.0;
    for (int s = 0; s < cfg.n_seqs; ++s) {
      for (std::size_t j = 0; j < n; ++j) {
        ids[j] = pick(rng);
        logits[j] = token_logit[ids[j]];
      }
      const double mx = kt.max(logits);
      const double total = kt.exp_shift_sum(logits, mx, 1.0, weights);
      double o = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double a = weights[j] / total;
        max_weight = std::max(max_weight, a);
        o += a * value_feature[ids[j]];
      }
      outputs.push_back(o);
    }
    Prop1Row row;
    row.length = length;
    row.sigma = sample_std(outputs);
    row.variance = row.sigma * row.sigma;
    row.max_weight = max_weight;
    row.bound = static_cast<double>(n) * max_weight * max_weight * result.max_value_variance * slack;
    row.bound_holds = row.variance <= row.bound;
    result.rows.push_back(row);
    points.emplace_back(static_cast<double>(length), row.sigma);
  }
  result.fit = fit_loglog_slope(points);
  return result;
}

std::vector<double> dispersion_topk(const ModelParams& params, int length, int k, int n_examples,
                                    Rng& rng) {
  if (k > length) throw ContractError("dispersion_topk: k exceeds sequence length");
  if (k < 1 || n_examples < 1) throw ContractError("dispersion_topk: k and n_examples must be positive");
  std::vector<double> acc(static_cast<std::size_t>(k), 0.0);
  std::vector<double> sorted;
  for_each_sequence(params, length, n_examples, rng, [&](const Workspace& ws) {
    sorted = ws.weights;
    std::partial_sort(sorted.begin(), sorted.begin() + k, sorted.end(), std::greater<>());
    for (int i = 0; i < k; ++i) acc[static_cast<std::size_t>(i)] += sorted[static_cast<std::size_t>(i)];
  });
  for (double& v : acc) v /= n_examples;
  return acc;
}

std::vector<DriftRow> drift_curve(const ModelParams& params, const std::vector<int>& lengths,
                                  int n_seqs, int train_length, std::uint64_t seed, bool pre_norm) {
  if (std::find(lengths.begin(), lengths.end(), train_length) == lengths.end()) {
    throw ContractError("drift_curve: lengths must include the training length " +
                        std::to_string(train_length));
  }
  FeatureStatsOptions opts;
  opts.tracked = {};
  opts.pre_norm = pre_norm;
  std::vector<DriftRow> rows;
  for (int length : lengths) {
    Rng rng = make_stream(seed, "probe", static_cast<std::uint64_t>(length));
    const auto rec = feature_stats(params, length, n_seqs, rng, opts);
    rows.push_back({length, 0.0, rec.global_mean, rec.global_var});
  }
  const auto ref = *std::find_if(rows.begin(), rows.end(),
                                 [train_length](const DriftRow& r) { return r.length == train_length; });
  if (!(ref.global_var > 0.0)) {
    throw DegenerateModelError("drift_curve: zero global variance at the training length");
  }
  for (auto& r : rows) r.normalized_mean_drift = (r.global_mean - ref.global_mean) / ref.global_var;
  return rows;
}

void write_featstd_header(std::ostream& os, const csv::Metadata& metadata) {
  csv::write_metadata(os, metadata);
  csv::write_row(os, {"source", "length", "feature", "std"});
}

void write_featstd_rows(std::ostream& os, const std::string& source, int length,
                        const std::vector<int>& features, const std::vector<double>& stds) {
  for (std::size_t i = 0; i < features.size(); ++i) {
    csv::write_row(os, {source, std::to_string(length), std::to_string(features[i]),
                        csv::format_double(stds[i])});
  }
}

void write_drift_header(std::ostream& os, const csv::Metadata& metadata) {
  csv::write_metadata(os, metadata);
  csv::write_row(os, {"norm_mode", "length", "normalized_mean_drift", "global_var"});
}

void write_drift_rows(std::ostream& os, const std::string& norm_mode, const std::vector<DriftRow>& rows) {
  for (const auto& r : rows) {
    csv::write_row(os, {norm_mode, std::to_string(r.length), csv::format_double(r.normalized_mean_drift),
                        csv::format_double(r.global_var)});
  }
}

void write_dispersion_header(std::ostream& os, const csv::Metadata& metadata) {
  csv::write_metadata(os, metadata);
  csv::write_row(os, {"norm_mode", "length", "rank", "mean_weight"});
}

void write_dispersion_rows(std::ostream& os, const std::string& norm_mode, int length,
                           const std::vector<double>& topk) {
  for (std::size_t i = 0; i < topk.size(); ++i) {
    csv::write_row(os, {norm_mode, std::to_string(length), std::to_string(i + 1),
                        csv::format_double(topk[i])});
  }
}

void write_featdump_header(std::ostream& os, const csv::Metadata& metadata) {
  csv::write_metadata(os, metadata);
  csv::write_row(os, {"length", "feature", "sample_value"});
}

void write_featdump_rows(std::ostream& os, const ProbeRecord& record) {
  for (std::size_t i = 0; i < record.raw.size(); ++i) {
    for (double v : record.raw[i]) {
      csv::write_row(os, {std::to_string(record.length), std::to_string(record.tracked[i]),
                          csv::format_double(v)});
    }
  }
}

}  // namespace attnlab::probes
