#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "attnlab/model/checkpoint.hpp"
#include "attnlab/util/csv.hpp"

namespace attnlab {

struct EvalRow {
  TaskKind task = TaskKind::dict;
  NormMode norm_mode = NormMode::none;
  bool adaptive = false;
  std::uint64_t seed = 0;
  int length = 0;
  std::int64_t n_examples = 0;
  std::int64_t correct = 0;
  double accuracy = 0.0;  // correct / n_examples, 0 when there are no examples
  std::uint64_t input_hash = 0;  // digest of every evaluation batch at this length
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::int64_t steps = 0;
  double final_loss = 0.0;
  double reference_entropy = 0.0;
};

inline constexpr std::size_t kEvalChunk = 256;

/// Accuracy of `ckpt` at each length on `n_examples` fresh sequences. The
/// data at length N comes from make_stream(eval_seed, "eval", N) and is
/// generated in chunks of kEvalChunk examples, so two checkpoints evaluated
/// with the same eval_seed see identical inputs. n_examples = 0 yields no rows.
EvalReport evaluate(const Checkpoint& ckpt, const std::vector<int>& lengths,
                    std::int64_t n_examples, std::uint64_t eval_seed, bool adaptive,
                    std::uint64_t run_seed = 0);

inline const std::vector<std::string> kEvalColumns = {"task",   "norm_mode",  "adaptive", "seed",
                                                      "length", "n_examples", "accuracy"};

void write_eval_csv(std::ostream& os, const std::vector<EvalRow>& rows,
                    const csv::Metadata& metadata = {});
std::vector<EvalRow> read_eval_csv(const std::string& path);

}  // namespace attnlab
