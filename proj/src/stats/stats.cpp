#include "attnlab/stats/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include "attnlab/util/error.hpp"

namespace attnlab::stats {
namespace {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&v](auto i, auto j) { return v[i] < v[j]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double t_sf(double t, int df) {
  if (df < 1) throw ContractError("t_sf: df must be >= 1");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const double nu = static_cast<double>(df);
  const double x = nu / (nu + t * t);
  return std::clamp(incomplete_beta(x, 0.5 * nu, 0.5), 0.0, 1.0);
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("paired_t_test: samples differ in length");
  if (a.size() < 2) throw ContractError("paired_t_test: need at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  double max_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = a[i] - b[i];
    max_abs = std::max(max_abs, std::abs(d[i]));
  }
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult r;
  r.n = static_cast<int>(n);
  r.df = static_cast<int>(n) - 1;
  r.mean_diff = mean;
  if (sd <= 1e-14 * max_abs || max_abs == 0.0) {
    if (max_abs == 0.0) {
      r.t_stat = 0.0;
      r.p_value = 1.0;
      return r;
    }
    throw DegenerateVarianceError("paired_t_test: all differences equal " + std::to_string(mean) +
                                  "; t is undefined");
  }
  r.t_stat = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p_value = t_sf(r.t_stat, r.df);
  return r;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("spearman: need two equal samples of size >= 2");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<MeanRow> mean_table(const std::vector<EvalRow>& rows) {
  std::vector<MeanRow> out;
  std::vector<double> sums;
  for (const auto& r : rows) {
    const std::string label = variant_label(r.norm_mode, r.adaptive);
    auto it = std::find_if(out.begin(), out.end(), [&](const MeanRow& m) {
      return m.task == r.task && m.variant == label && m.length == r.length;
    });
    if (it == out.end()) {
      out.push_back({r.task, label, r.length, 0, 0.0});
      sums.push_back(0.0);
      it = out.end() - 1;
    }
    const auto idx = static_cast<std::size_t>(it - out.begin());
    it->n_seeds += 1;
    sums[idx] += 100.0 * r.accuracy;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].mean_percent = sums[i] / out[i].n_seeds;
  return out;
}

std::vector<CompareRow> compare(const std::vector<EvalRow>& rows, const std::string& variant_a,
                                const std::string& variant_b) {
  // (task, length) -> seed -> accuracy percent, per side.
  using Key = std::pair<int, int>;
  std::map<Key, std::map<std::uint64_t, double>> side_a, side_b;
  std::vector<Key> order;
  for (const auto& r : rows) {
    const std::string label = variant_label(r.norm_mode, r.adaptive);
    const Key key{static_cast<int>(r.task), r.length};
    if (label != variant_a && label != variant_b) continue;
    if (std::find(order.begin(), order.end(), key) == order.end()) order.push_back(key);
    if (label == variant_a) side_a[key][r.seed] = 100.0 * r.accuracy;
    if (label == variant_b) side_b[key][r.seed] = 100.0 * r.accuracy;
  }
  if (order.empty()) {
    throw PairingError("no rows for variants " + variant_a + " / " + variant_b);
  }

  std::vector<CompareRow> out;
  for (const auto& key : order) {
    const auto& sa = side_a[key];
    const auto& sb = side_b[key];
    std::string missing;
    for (const auto& [seed, acc] : sa) {
      if (!sb.count(seed)) missing += " " + std::to_string(seed) + "(" + variant_b + ")";
    }
    for (const auto& [seed, acc] : sb) {
      if (!sa.count(seed)) missing += " " + std::to_string(seed) + "(" + variant_a + ")";
    }
    if (!missing.empty()) {
      throw PairingError("unpaired seeds at length " + std::to_string(key.second) + ":" + missing);
    }
    std::vector<double> a, b;
    for (const auto& [seed, acc] : sa) {
      a.push_back(acc);
      b.push_back(sb.at(seed));
    }
    CompareRow row;
    row.task = static_cast<TaskKind>(key.first);
    row.length = key.second;
    row.variant_a = variant_a;
    row.variant_b = variant_b;
    row.mean_a = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    row.mean_b = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
    row.mean_diff = row.mean_a - row.mean_b;
    row.test = paired_t_test(a, b);
    out.push_back(row);
  }
  return out;
}

void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows,
                       const csv::Metadata& metadata) {
  csv::write_metadata(os, metadata);
  csv::write_row(os, {"task", "length", "variant_a", "variant_b", "mean_a", "mean_b", "mean_diff",
                      "t_stat", "df", "p_value"});
  for (const auto& r : rows) {
    csv::write_row(os, {std::string(task_name(r.task)), std::to_string(r.length), r.variant_a,
                        r.variant_b, csv::format_double(r.mean_a), csv::format_double(r.mean_b),
                        csv::format_double(r.mean_diff), csv::format_double(r.test.t_stat),
                        std::to_string(r.test.df), csv::format_double(r.test.p_value)});
  }
}

}  // namespace attnlab::stats
