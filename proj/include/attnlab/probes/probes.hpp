#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "attnlab/model/params.hpp"
#include "attnlab/util/csv.hpp"
#include "attnlab/util/rng.hpp"

namespace attnlab::probes {

struct ProbeRecord {
  int length = 0;
  std::vector<int> tracked;
  std::vector<double> feature_std;  // sample std over sequences, per tracked feature
  double global_mean = 0.0;         // mean over sequences of μ_global
  double global_var = 0.0;          // mean over sequences of σ²_global
  std::vector<std::vector<double>> raw;  // per tracked feature, one value per sequence
};

struct FeatureStatsOptions {
  std::vector<int> tracked = {0, 1, 2, 3, 4};
  bool dump_raw = false;
  bool pre_norm = false;  // read O before the normalization layer
};

/// Statistics of the attention output O over `n_seqs` sequences of length N
/// drawn from the model's own task distribution. O is read after the
/// normalization layer unless options.pre_norm. Throws ContractError when
/// n_seqs < 2.
ProbeRecord feature_stats(const ModelParams& params, int length, int n_seqs, Rng& rng,
                          const FeatureStatsOptions& options = {});

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int n_points = 0;
  std::vector<std::string> warnings;
};

/// Least squares on (ln N, ln σ). Points with σ <= 0 are dropped with a
/// warning; fewer than 3 usable points throws InsufficientDataError.
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

struct Prop1Config {
  int model_dim = 64;
  int vocab_size = 1024;
  std::vector<int> lengths = {16, 32, 64, 128, 256, 512, 1024, 2048, 4096};
  int n_seqs = 100;
  int feature = 0;
};

struct Prop1Row {
  int length = 0;
  double sigma = 0.0;       // std of O_d over sequences
  double variance = 0.0;
  double max_weight = 0.0;  // largest attention weight seen at this length
  double bound = 0.0;       // N · max_weight² · max_d Var_vocab(v_d) · (1 + 5/√n_seqs)
  bool bound_holds = false;
};

struct Prop1Result {
  std::vector<Prop1Row> rows;
  SlopeFit fit;
  double value_mean_max_abs = 0.0;  // |vocabulary mean of W_V x| after centering
  double max_value_variance = 0.0;
};

/// Frozen random attention over a finite vocabulary of Gaussian tokens with
/// the value vectors centered over the vocabulary, a fixed query and a fixed
/// feature; measures how the output feature's spread falls with N.
Prop1Result verify_prop1(const Prop1Config& config, Rng& rng);

/// Elementwise mean over `n_examples` sequences of the k largest attention
/// weights, sorted descending. Throws ContractError when k > N.
std::vector<double> dispersion_topk(const ModelParams& params, int length, int k, int n_examples,
                                    Rng& rng);

struct DriftRow {
  int length = 0;
  double normalized_mean_drift = 0.0;
  double global_mean = 0.0;
  double global_var = 0.0;
};

/// Global mean drift relative to `train_length`, divided by the global
/// variance at `train_length`, plus the global variance per length. Length N
/// uses make_stream(seed, "probe", N). Throws ContractError when
/// `train_length` is not among `lengths` and DegenerateModelError when the
/// training-length global variance is 0.
std::vector<DriftRow> drift_curve(const ModelParams& params, const std::vector<int>& lengths,
                                  int n_seqs, int train_length, std::uint64_t seed,
                                  bool pre_norm = false);

// CSV writers for the probe outputs.
void write_featstd_header(std::ostream& os, const csv::Metadata& metadata = {});
void write_featstd_rows(std::ostream& os, const std::string& source, int length,
                        const std::vector<int>& features, const std::vector<double>& stds);
void write_drift_header(std::ostream& os, const csv::Metadata& metadata = {});
void write_drift_rows(std::ostream& os, const std::string& norm_mode, const std::vector<DriftRow>& rows);
void write_dispersion_header(std::ostream& os, const csv::Metadata& metadata = {});
void write_dispersion_rows(std::ostream& os, const std::string& norm_mode, int length,
                           const std::vector<double>& topk);
void write_featdump_header(std::ostream& os, const csv::Metadata& metadata = {});
void write_featdump_rows(std::ostream& os, const ProbeRecord& record);

}  // namespace attnlab::probes
