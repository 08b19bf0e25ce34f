#include "attnlab/harness/evaluate.hpp"

#include <cmath>

#include "attnlab/model/inference.hpp"
#include "attnlab/tasks/tasks.hpp"
#include "attnlab/util/error.hpp"
#include "attnlab/util/rng.hpp"

namespace attnlab {

EvalReport evaluate(const Checkpoint& ckpt, const std::vector<int>& lengths,
                    std::int64_t n_examples, std::uint64_t eval_seed, bool adaptive,
                    std::uint64_t run_seed) {
  const ModelConfig& mc = ckpt.params.config;
  TaskConfig tc;
  tc.task = mc.task;
  tc.key_classes = mc.key_classes;
  tc.value_classes = mc.value_classes;

  EvalReport report;
  report.steps = ckpt.step;
  report.final_loss = ckpt.final_loss;
  report.reference_entropy = ckpt.reference_entropy;
  if (n_examples <= 0) return report;

  const Predictor predictor(ckpt.params);
  const TempMode temp = adaptive ? TempMode::matching(ckpt.reference_entropy) : TempMode::fixed();
  Workspace ws;
  for (int length : lengths) {
    if (length < 1 || length > mc.key_classes) {
      throw CapacityError("evaluation length " + std::to_string(length) + " exceeds " +
                          std::to_string(mc.key_classes) + " key classes");
    }
    Rng rng = make_stream(eval_seed, "eval", static_cast<std::uint64_t>(length));
    EvalRow row;
    row.task = mc.task;
    row.norm_mode = mc.norm;
    row.adaptive = adaptive;
    row.seed = run_seed;
    row.length = length;
    row.n_examples = n_examples;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::int64_t done = 0; done < n_examples;) {
      const auto chunk = static_cast<std::size_t>(
          std::min<std::int64_t>(static_cast<std::int64_t>(kEvalChunk), n_examples - done));
      const TaskBatch batch = gen_batch(tc, chunk, static_cast<std::size_t>(length), rng);
      h = (h ^ batch.hash()) * 0x100000001b3ULL;
      for (std::size_t b = 0; b < chunk; ++b) {
        if (predictor.predict(batch, b, temp, ws) == batch.targets[b]) ++row.correct;
      }
      done += static_cast<std::int64_t>(chunk);
    }
    row.input_hash = h;
    row.accuracy = static_cast<double>(row.correct) / static_cast<double>(row.n_examples);
    report.rows.push_back(row);
  }
  return report;
}

void write_eval_csv(std::ostream& os, const std::vector<EvalRow>& rows,
                    const csv::Metadata& metadata) {
  csv::write_metadata(os, metadata);
  csv::write_row(os, kEvalColumns);
  for (const auto& r : rows) {
    csv::write_row(os, {std::string(task_name(r.task)), std::string(norm_name(r.norm_mode)),
                        r.adaptive ? "1" : "0", std::to_string(r.seed), std::to_string(r.length),
                        std::to_string(r.n_examples), csv::format_double(r.accuracy)});
  }
}

std::vector<EvalRow> read_eval_csv(const std::string& path) {
  const auto table = csv::read(path);
  if (table.header != kEvalColumns) {
    throw ConfigError(path + ": columns do not match task,norm_mode,adaptive,seed,length,n_examples,accuracy");
  }
  std::vector<EvalRow> rows;
  for (const auto& cells : table.rows) {
    EvalRow r;
    try {
      r.task = parse_task(cells[0]);
      r.norm_mode = parse_norm(cells[1]);
      r.adaptive = cells[2] == "1" || cells[2] == "true";
      r.seed = std::stoull(cells[3]);
      r.length = std::stoi(cells[4]);
      r.n_examples = std::stoll(cells[5]);
      r.accuracy = std::stod(cells[6]);
    } catch (const std::logic_error&) {
      throw ConfigError(path + ": malformed row");
    }
    r.correct = std::llround(r.accuracy * static_cast<double>(r.n_examples));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace attnlab
