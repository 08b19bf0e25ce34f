#include "attnlab/harness/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include "attnlab/harness/train.hpp"
#include "attnlab/util/error.hpp"

namespace attnlab {

Variant parse_variant(const std::string& label) {
  Variant v;
  std::string base = label;
  const std::string suffix = "+adaptive";
  if (base.size() > suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
    v.adaptive = true;
    base.resize(base.size() - suffix.size());
  } else if (base == "adaptive") {
    v.adaptive = true;
    base = "baseline";
  }
  v.norm = parse_norm(base);
  return v;
}

SweepResult sweep(const RunConfig& base, const std::vector<std::uint64_t>& seeds,
                  const std::vector<Variant>& variants, const SweepOptions& options) {
  if (seeds.empty()) throw ContractError("sweep: no seeds");
  if (variants.empty()) throw ContractError("sweep: no variants");
  base.validate();

  std::vector<NormMode> norms;
  for (const auto& v : variants) {
    if (std::find(norms.begin(), norms.end(), v.norm) == norms.end()) norms.push_back(v.norm);
  }

  struct Job {
    std::uint64_t seed;
    NormMode norm;
    SweepRun run;
    std::vector<std::vector<EvalRow>> rows_by_variant;
  };
  std::vector<Job> jobs;
  for (auto seed : seeds)
    for (auto norm : norms) jobs.push_back({seed, norm, {}, std::vector<std::vector<EvalRow>>(variants.size())});

  std::mutex log_mutex;
  auto log = [&](const std::string& msg) {
    if (!options.log) return;
    std::lock_guard lock(log_mutex);
    options.log(msg);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      Job& job = jobs[i];
      RunConfig cfg = base;
      cfg.seed = job.seed;
      cfg.norm_mode = job.norm;
      job.run.seed = job.seed;
      job.run.norm = job.norm;
      try {
        log("event=train_start seed=" + std::to_string(job.seed) + " norm=" + std::string(norm_name(job.norm)));
        Checkpoint ckpt = train(cfg);
        job.run.steps = ckpt.step;
        job.run.final_loss = ckpt.final_loss;
        job.run.reference_entropy = ckpt.reference_entropy;
        for (std::size_t v = 0; v < variants.size(); ++v) {
          if (variants[v].norm != job.norm) continue;
          auto report = evaluate(ckpt, cfg.eval_lengths, cfg.eval_examples, job.seed,
                                 variants[v].adaptive, job.seed);
          job.rows_by_variant[v] = std::move(report.rows);
        }
        log("event=run_done seed=" + std::to_string(job.seed) + " norm=" +
            std::string(norm_name(job.norm)) + " final_loss=" + std::to_string(ckpt.final_loss));
        if (options.keep_checkpoints) job.run.checkpoint = std::move(ckpt);
      } catch (const std::exception& e) {
        job.run.error = e.what();
        log("event=run_failed seed=" + std::to_string(job.seed) + " norm=" +
            std::string(norm_name(job.norm)) + " error=\"" + e.what() + "\"");
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(options.jobs, static_cast<int>(jobs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SweepResult result;
  for (auto seed : seeds) {
    for (std::size_t v = 0; v < variants.size(); ++v) {
      for (auto& job : jobs) {
        if (job.seed != seed || job.norm != variants[v].norm) continue;
        result.rows.insert(result.rows.end(), job.rows_by_variant[v].begin(), job.rows_by_variant[v].end());
      }
    }
  }
  for (auto& job : jobs) result.runs.push_back(std::move(job.run));
  return result;
}

}  // namespace attnlab
