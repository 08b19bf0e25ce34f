#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "attnlab/harness/evaluate.hpp"
#include "attnlab/util/csv.hpp"

namespace attnlab::stats {

/// Regularized incomplete beta I_x(a, b), continued fraction to ~1e-15.
double incomplete_beta(double x, double a, double b);

/// Two-sided tail probability P(|T| >= |t|) of Student's t with `df` degrees
/// of freedom, = I_{df/(df+t²)}(df/2, 1/2). Throws ContractError for df < 1.
double t_sf(double t, int df);

struct TTestResult {
  double t_stat = 0.0;
  int df = 0;
  double p_value = 1.0;
  int n = 0;
  double mean_diff = 0.0;
};

/// Paired t-test on d = a − b with the n−1 sample deviation. All-zero
/// differences give t = 0, p = 1; identical non-zero differences throw
/// DegenerateVarianceError. Throws ContractError unless |a| = |b| >= 2.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

struct MeanRow {
  TaskKind task;
  std::string variant;
  int length;
  int n_seeds;
  double mean_percent;
};

/// Mean accuracy (percent) per (task, variant, length) in first-seen order.
std::vector<MeanRow> mean_table(const std::vector<EvalRow>& rows);

struct CompareRow {
  TaskKind task;
  int length;
  std::string variant_a;
  std::string variant_b;
  double mean_a;  // percent
  double mean_b;  // percent
  double mean_diff;
  TTestResult test;
};

/// Paired comparison of two variants per (task, length) over seeds, on
/// accuracies in percent. Throws PairingError naming the seeds present for
/// only one variant.
std::vector<CompareRow> compare(const std::vector<EvalRow>& rows, const std::string& variant_a,
                                const std::string& variant_b);

void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows,
                       const csv::Metadata& metadata = {});

}  // namespace attnlab::stats
