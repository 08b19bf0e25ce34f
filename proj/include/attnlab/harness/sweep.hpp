#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "attnlab/harness/evaluate.hpp"
#include "attnlab/harness/run_config.hpp"

namespace attnlab {

struct Variant {
  NormMode norm = NormMode::none;
  bool adaptive = false;

  std::string label() const { return variant_label(norm, adaptive); }
  bool operator==(const Variant&) const = default;
};

/// Parses "baseline", "ln", "std", "layernorm+adaptive", ...
Variant parse_variant(const std::string& label);

struct SweepRun {
  std::uint64_t seed = 0;
  NormMode norm = NormMode::none;
  std::optional<Checkpoint> checkpoint;  // kept only when requested
  std::int64_t steps = 0;
  double final_loss = 0.0;
  double reference_entropy = 0.0;
  std::string error;  // non-empty when the run failed
};

struct SweepResult {
  std::vector<EvalRow> rows;  // seed-major, then variant order, then length
  std::vector<SweepRun> runs;
};

struct SweepOptions {
  int jobs = 1;
  bool keep_checkpoints = false;
  std::function<void(const std::string&)> log;
};

/// Trains one model per (seed, norm mode) and evaluates it for every variant
/// using that norm mode. Evaluation data depends only on the seed, so all
/// variants of a seed are scored on identical inputs. A failed run is
/// recorded in `runs` and contributes no rows; the sweep continues.
SweepResult sweep(const RunConfig& base, const std::vector<std::uint64_t>& seeds,
                  const std::vector<Variant>& variants, const SweepOptions& options = {});

}  // namespace attnlab
