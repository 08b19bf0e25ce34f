#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "attnlab/probes/probes.hpp"
#include "attnlab/util/error.hpp"

using namespace attnlab;
using namespace attnlab::probes;

namespace {

ModelParams random_model(NormMode norm = NormMode::none, int key_classes = 4096) {
  ModelConfig c;
  c.task = TaskKind::dict;
  c.model_dim = 16;
  c.key_dim = 12;
  c.hidden_dim = 16;
  c.key_classes = key_classes;
  c.value_classes = 8;
  c.norm = norm;
  Rng rng = make_stream(11, "init");
  return ModelParams::init(c, rng);
}

std::vector<std::pair<double, double>> power_law(double slope, double scale) {
  std::vector<std::pair<double, double>> pts;
  for (int n = 16; n <= 4096; n *= 2) pts.emplace_back(n, scale * std::pow(n, slope));
  return pts;
}

}  // namespace

// ---- log-log slope ----------------------------------------------------------------------

TEST(SlopeFit, ExactPowerLaw) {
  const SlopeFit fit = fit_loglog_slope(power_law(-0.5, 3.0));
  EXPECT_NEAR(fit.slope, -0.5, 1e-12);
  EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-12);
  EXPECT_NEAR(fit.r2, 1.0, 1e-12);
  EXPECT_EQ(fit.n_points, 9);
  EXPECT_TRUE(fit.warnings.empty());
}

TEST(SlopeFit, ConstantHasZeroSlope) {
  EXPECT_NEAR(fit_loglog_slope(power_law(0.0, 2.0)).slope, 0.0, 1e-12);
}

TEST(SlopeFit, NoisyPowerLaw) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> noise(0.0, 0.01);
  auto pts = power_law(-0.5, 1.0);
  for (auto& p : pts) p.second *= std::exp(noise(gen));
  const double slope = fit_loglog_slope(pts).slope;
  EXPECT_GE(slope, -0.52);
  EXPECT_LE(slope, -0.48);
}

TEST(SlopeFit, NonPositiveDroppedWithWarning) {
  auto pts = power_law(-0.5, 1.0);
  pts.emplace_back(8192, 0.0);
  pts.emplace_back(16384, -1.0);
  const SlopeFit fit = fit_loglog_slope(pts);
  EXPECT_EQ(fit.n_points, 9);
  EXPECT_EQ(fit.warnings.size(), 2u);
  EXPECT_NEAR(fit.slope, -0.5, 1e-12);
}

TEST(SlopeFit, TooFewPoints) {
  EXPECT_THROW(fit_loglog_slope({{16, 1.0}, {32, 0.7}}), InsufficientDataError);
  EXPECT_THROW(fit_loglog_slope({{16, 1.0}, {32, 0.7}, {64, 0.0}}), InsufficientDataError);
}

// ---- frozen random attention over a vocabulary --------------------------------------------

TEST(Prop1, ValuesCenteredAndSpreadDecays) {
  Rng rng = make_stream(0, "prop1");
  const Prop1Result r = verify_prop1(Prop1Config{}, rng);
  EXPECT_LT(r.value_mean_max_abs, 1e-12);
  EXPECT_GT(r.max_value_variance, 0.0);
  ASSERT_EQ(r.rows.size(), 9u);
  EXPECT_GE(r.fit.slope, -0.65);
  EXPECT_LE(r.fit.slope, -0.35);
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.bound_holds) << "length " << row.length;
    EXPECT_LE(row.variance, row.bound);
    EXPECT_NEAR(row.sigma * row.sigma, row.variance, 1e-12 * std::max(1.0, row.variance));
    EXPECT_GT(row.max_weight, 0.0);
    EXPECT_LE(row.max_weight, 1.0);
  }
}

TEST(Prop1, Deterministic) {
  Prop1Config cfg;
  cfg.lengths = {16, 64, 256};
  cfg.n_seqs = 20;
  Rng a = make_stream(5, "prop1"), b = make_stream(5, "prop1");
  const auto x = verify_prop1(cfg, a), y = verify_prop1(cfg, b);
  for (std::size_t i = 0; i < x.rows.size(); ++i) EXPECT_EQ(x.rows[i].sigma, y.rows[i].sigma);
}

// ---- feature statistics --------------------------------------------------------------------

TEST(FeatureStats, ZeroValueProjectionGivesZeros) {
  ModelParams p = random_model();
  std::fill(p.w_value.storage().begin(), p.w_value.storage().end(), 0.0);
  Rng rng = make_stream(1, "probe");
  const ProbeRecord r = feature_stats(p, 32, 50, rng);
  for (double s : r.feature_std) EXPECT_EQ(s, 0.0);
  EXPECT_EQ(r.global_mean, 0.0);
  EXPECT_EQ(r.global_var, 0.0);
}

TEST(FeatureStats, Contracts) {
  const ModelParams p = random_model();
  Rng rng = make_stream(1, "probe");
  EXPECT_THROW(feature_stats(p, 16, 1, rng), ContractError);
  FeatureStatsOptions bad;
  bad.tracked = {99};
  EXPECT_THROW(feature_stats(p, 16, 10, rng, bad), ContractError);
}

TEST(FeatureStats, RawDumpMatchesStd) {
  const ModelParams p = random_model();
  Rng rng = make_stream(2, "probe");
  FeatureStatsOptions opts;
  opts.dump_raw = true;
  const ProbeRecord r = feature_stats(p, 16, 300, rng, opts);
  ASSERT_EQ(r.raw.size(), opts.tracked.size());
  for (std::size_t i = 0; i < r.raw.size(); ++i) {
    ASSERT_EQ(r.raw[i].size(), 300u);
    const auto& x = r.raw[i];
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / 300.0;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    EXPECT_NEAR(r.feature_std[i], std::sqrt(ss / 299.0), 1e-12);
  }
}

// A frozen random model averages over more items as N grows, so the spread of
// most output features shrinks from N=16 to N=1024.
TEST(FeatureStats, RandomModelSpreadDecays) {
  const ModelParams p = random_model();
  FeatureStatsOptions opts;
  opts.pre_norm = true;
  opts.tracked.resize(16);
  std::iota(opts.tracked.begin(), opts.tracked.end(), 0);
  Rng a = make_stream(3, "probe", 16), b = make_stream(3, "probe", 1024);
  const ProbeRecord shortr = feature_stats(p, 16, 2000, a, opts);
  const ProbeRecord longr = feature_stats(p, 1024, 2000, b, opts);
  int decayed = 0;
  for (std::size_t i = 0; i < opts.tracked.size(); ++i) decayed += longr.feature_std[i] < shortr.feature_std[i];
  EXPECT_GE(decayed, 15);  // at least 90% of 16
}

TEST(FeatureStats, LayernormKeepsUnitScale) {
  const ModelParams p = random_model(NormMode::layernorm);
  Rng rng = make_stream(4, "probe");
  const ProbeRecord r = feature_stats(p, 1024, 200, rng);
  // γ=1, β=0 at init: every normalized output has mean 0, variance just below 1.
  EXPECT_NEAR(r.global_mean, 0.0, 1e-9);
  EXPECT_GT(r.global_var, 0.99);
  EXPECT_LE(r.global_var, 1.0);
}

// ---- dispersion ----------------------------------------------------------------------------

TEST(Dispersion, SingleItemHasAllWeight) {
  Rng rng = make_stream(5, "probe");
  const auto w = dispersion_topk(random_model(), 1, 1, 10, rng);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NEAR(w[0], 1.0, 1e-12);
}

TEST(Dispersion, DescendingAndBounded) {
  Rng rng = make_stream(6, "probe");
  const auto w = dispersion_topk(random_model(), 64, 16, 40, rng);
  ASSERT_EQ(w.size(), 16u);
  for (std::size_t i = 1; i < w.size(); ++i) EXPECT_GE(w[i - 1], w[i]);
  EXPECT_LE(std::accumulate(w.begin(), w.end(), 0.0), 1.0 + 1e-12);
  EXPECT_GT(w.back(), 0.0);
}

TEST(Dispersion, TooManyRequested) {
  Rng rng = make_stream(7, "probe");
  EXPECT_THROW(dispersion_topk(random_model(), 4, 5, 10, rng), ContractError);
}

// ---- global drift --------------------------------------------------------------------------

TEST(Drift, ZeroAtTrainingLength) {
  const auto rows = drift_curve(random_model(), {16, 64, 256}, 200, 64, 9);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].normalized_mean_drift, 0.0);
  for (const auto& r : rows) EXPECT_GT(r.global_var, 0.0);
}

TEST(Drift, MatchesFeatureStatsOnSameStream) {
  const ModelParams p = random_model();
  const auto rows = drift_curve(p, {16, 64}, 100, 16, 3);
  Rng a = make_stream(3, "probe", 16), b = make_stream(3, "probe", 64);
  const auto s16 = feature_stats(p, 16, 100, a), s64 = feature_stats(p, 64, 100, b);
  EXPECT_DOUBLE_EQ(rows[0].global_var, s16.global_var);
  EXPECT_DOUBLE_EQ(rows[1].global_mean, s64.global_mean);
  EXPECT_DOUBLE_EQ(rows[1].normalized_mean_drift, (s64.global_mean - s16.global_mean) / s16.global_var);
}

TEST(Drift, Contracts) {
  EXPECT_THROW(drift_curve(random_model(), {16, 64}, 10, 32, 0), ContractError);
  ModelParams p = random_model();
  std::fill(p.w_value.storage().begin(), p.w_value.storage().end(), 0.0);
  EXPECT_THROW(drift_curve(p, {16, 64}, 10, 16, 0), DegenerateModelError);
}

// ---- CSV outputs ---------------------------------------------------------------------------

TEST(ProbeCsv, Headers) {
  std::ostringstream a, b, c, d;
  write_featstd_header(a);
  write_drift_header(b);
  write_dispersion_header(c);
  write_featdump_header(d);
  EXPECT_EQ(a.str(), "source,length,feature,std\n");
  EXPECT_EQ(b.str(), "norm_mode,length,normalized_mean_drift,global_var\n");
  EXPECT_EQ(c.str(), "norm_mode,length,rank,mean_weight\n");
  EXPECT_EQ(d.str(), "length,feature,sample_value\n");
}

TEST(ProbeCsv, RowsPerFeature) {
  std::ostringstream os;
  write_featstd_rows(os, "model", 32, {0, 1, 2}, {0.5, 0.25, 0.125});
  std::istringstream is(os.str());
  std::string line;
  int n = 0;
  while (std::getline(is, line)) ++n;
  EXPECT_EQ(n, 3);
  EXPECT_EQ(os.str().substr(0, 10), "model,32,0");
}
