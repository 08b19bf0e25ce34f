// attnlab: train, evaluate, sweep, probe and compare attention models on
// synthetic order-invariant tasks. Results go to files, progress to stderr.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "attnlab/harness/evaluate.hpp"
#include "attnlab/harness/run_config.hpp"
#include "attnlab/harness/sweep.hpp"
#include "attnlab/harness/train.hpp"
#include "attnlab/model/checkpoint.hpp"
#include "attnlab/probes/probes.hpp"
#include "attnlab/simd/kernels.hpp"
#include "attnlab/stats/stats.hpp"
#include "attnlab/util/error.hpp"

namespace fs = std::filesystem;
using namespace attnlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Common {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 0;
  bool force = false;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Run config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out_dir, "Output directory (default $ATTNLAB_OUT or ./results)");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&c](std::uint64_t s) { c.seed = s; c.seed_given = true; }, "Root seed");
  cmd->add_option("--jobs", c.jobs, "Worker threads for sweeps (default: available cores)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--force", c.force, "Overwrite existing result files");
  cmd->add_option("--set", c.overrides, "Config override KEY=VALUE (repeatable)");
}

fs::path out_dir(const Common& c) {
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv("ATTNLAB_OUT"); env && *env) return env;
  return "results";
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path);
  for (const auto& o : c.overrides) apply_override(cfg, o);
  if (c.seed_given) cfg.seed = c.seed;
  cfg.validate();
  return cfg;
}

// Shared metadata block: the command, the resolved config and every override.
csv::Metadata metadata_for(const std::string& command, const Common& c,
                           const nlohmann::ordered_json& config) {
  csv::Metadata meta;
  meta.emplace_back("command", command);
  meta.emplace_back("simd", std::string(simd::isa_name(simd::kernels().isa)));
  if (!config.is_null()) meta.emplace_back("config", config.dump());
  for (const auto& o : c.overrides) meta.emplace_back("set", o);
  return meta;
}

// Prepares the output directory and refuses to clobber results without --force.
std::vector<fs::path> claim_outputs(const Common& c, const std::vector<std::string>& names) {
  const fs::path dir = out_dir(c);
  fs::create_directories(dir);
  std::vector<fs::path> paths;
  for (const auto& n : names) {
    fs::path p = dir / n;
    if (fs::exists(p) && !c.force) {
      throw ConfigError(p.string() + " exists; pass --force to overwrite");
    }
    paths.push_back(std::move(p));
  }
  return paths;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void log_line(const std::string& line) { std::cerr << line << '\n' << std::flush; }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int run_train(const Common& c) {
  const RunConfig cfg = resolve_config(c);
  const auto paths = claim_outputs(c, {"checkpoint.json"});
  log_line("[train] task=" + std::string(task_name(cfg.task)) + " norm=" +
           std::string(norm_name(cfg.norm_mode)) + " steps=" + std::to_string(cfg.steps) +
           " seed=" + std::to_string(cfg.seed));
  const Checkpoint ckpt = train(cfg, [](const TrainProgress& p) {
    log_line("[train] step=" + std::to_string(p.step) + " loss=" + csv::format_double(p.loss));
  });
  save_checkpoint(paths[0], ckpt);
  log_line("[train] done final_loss=" + csv::format_double(ckpt.final_loss) +
           " reference_entropy=" + csv::format_double(ckpt.reference_entropy));
  return kExitOk;
}

int run_eval(const Common& c, const std::string& checkpoint_path) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  // The checkpoint's own run config is the base; --config replaces it.
  RunConfig cfg = c.config_path.empty() ? run_config_from_json(ckpt.run_config)
                                         : load_run_config(c.config_path);
  for (const auto& o : c.overrides) apply_override(cfg, o);
  if (c.seed_given) cfg.seed = c.seed;
  cfg.validate();
  const auto paths = claim_outputs(c, {"eval.csv"});
  log_line("[eval] checkpoint=" + checkpoint_path + " lengths=" +
           std::to_string(cfg.eval_lengths.size()) + " examples=" + std::to_string(cfg.eval_examples));
  const EvalReport report =
      evaluate(ckpt, cfg.eval_lengths, cfg.eval_examples, cfg.seed, cfg.adaptive, cfg.seed);
  for (const auto& r : report.rows) {
    log_line("[eval] length=" + std::to_string(r.length) + " accuracy=" + csv::format_double(r.accuracy));
  }
  auto os = open_out(paths[0]);
  auto meta = metadata_for("eval", c, to_json(cfg));
  meta.emplace_back("checkpoint", fs::path(checkpoint_path).filename().string());
  write_eval_csv(os, report.rows, meta);
  return kExitOk;
}

int run_sweep(const Common& c, int n_seeds, const std::string& variants_arg, bool keep) {
  const RunConfig cfg = resolve_config(c);
  if (n_seeds < 1) throw ConfigError("--seeds must be >= 1");
  std::vector<Variant> variants;
  for (const auto& v : split_list(variants_arg)) variants.push_back(parse_variant(v));
  if (variants.empty()) throw ConfigError("--variants is empty");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n_seeds; ++i) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));

  const auto paths = claim_outputs(c, {"eval.csv", "runs.csv"});
  SweepOptions opts;
  opts.jobs = c.jobs > 0 ? c.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  opts.keep_checkpoints = keep;
  opts.log = [](const std::string& s) { log_line("[sweep] " + s); };
  const SweepResult result = sweep(cfg, seeds, variants, opts);

  auto meta = metadata_for("sweep", c, to_json(cfg));
  meta.emplace_back("seeds", std::to_string(n_seeds));
  meta.emplace_back("variants", variants_arg);
  {
    auto os = open_out(paths[0]);
    write_eval_csv(os, result.rows, meta);
  }
  auto os = open_out(paths[1]);
  csv::write_metadata(os, meta);
  csv::write_row(os, {"seed", "norm_mode", "steps", "final_loss", "reference_entropy", "error"});
  int failures = 0;
  for (const auto& r : result.runs) {
    csv::write_row(os, {std::to_string(r.seed), std::string(norm_name(r.norm)), std::to_string(r.steps),
                        csv::format_double(r.final_loss), csv::format_double(r.reference_entropy),
                        r.error});
    if (!r.error.empty()) ++failures;
    if (keep && r.checkpoint) {
      const fs::path p = out_dir(c) / ("checkpoint_" + std::string(norm_name(r.norm)) + "_seed" +
                                       std::to_string(r.seed) + ".json");
      if (fs::exists(p) && !c.force) throw ConfigError(p.string() + " exists; pass --force to overwrite");
      save_checkpoint(p, *r.checkpoint);
    }
  }
  if (failures > 0) {
    log_line("[sweep] " + std::to_string(failures) + " run(s) failed; see runs.csv");
    return kExitRuntime;
  }
  return kExitOk;
}

struct ProbeArgs {
  std::string checkpoint;
  int drift_seqs = 32768;
  int feature_seqs = 4096;
  int topk = 16;
  int topk_examples = 32;
  std::vector<int> features = {0, 1, 2, 3, 4};
  bool dump_raw = false;
  bool pre_norm = false;
};

int run_probe(const Common& c, const ProbeArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  RunConfig cfg = c.config_path.empty() ? run_config_from_json(ckpt.run_config)
                                         : load_run_config(c.config_path);
  for (const auto& o : c.overrides) apply_override(cfg, o);
  if (c.seed_given) cfg.seed = c.seed;
  cfg.validate();

  std::vector<std::string> names = {"featstd.csv", "drift.csv", "dispersion.csv"};
  if (a.dump_raw) names.push_back("featdump.csv");
  const auto paths = claim_outputs(c, names);
  const std::string label = std::string(norm_name(ckpt.params.config.norm));
  auto meta = metadata_for("probe", c, to_json(cfg));
  meta.emplace_back("checkpoint", fs::path(a.checkpoint).filename().string());
  meta.emplace_back("pre_norm", a.pre_norm ? "true" : "false");

  auto featstd = open_out(paths[0]);
  probes::write_featstd_header(featstd, meta);
  std::ofstream featdump;
  if (a.dump_raw) {
    featdump = open_out(paths[3]);
    probes::write_featdump_header(featdump, meta);
  }
  probes::FeatureStatsOptions fopts;
  fopts.tracked = a.features;
  fopts.dump_raw = a.dump_raw;
  fopts.pre_norm = a.pre_norm;
  for (int n : cfg.eval_lengths) {
    Rng rng = make_stream(cfg.seed, "probe.features", static_cast<std::uint64_t>(n));
    const auto rec = probes::feature_stats(ckpt.params, n, a.feature_seqs, rng, fopts);
    probes::write_featstd_rows(featstd, label, n, rec.tracked, rec.feature_std);
    if (a.dump_raw) probes::write_featdump_rows(featdump, rec);
    log_line("[probe] features length=" + std::to_string(n));
  }

  const auto drift = probes::drift_curve(ckpt.params, cfg.eval_lengths, a.drift_seqs, cfg.train_max_len,
                                         cfg.seed, a.pre_norm);
  auto drift_os = open_out(paths[1]);
  probes::write_drift_header(drift_os, meta);
  probes::write_drift_rows(drift_os, label, drift);
  log_line("[probe] drift done");

  auto disp = open_out(paths[2]);
  probes::write_dispersion_header(disp, meta);
  for (int n : cfg.eval_lengths) {
    if (n < a.topk) continue;
    Rng rng = make_stream(cfg.seed, "probe.dispersion", static_cast<std::uint64_t>(n));
    probes::write_dispersion_rows(disp, label, n,
                                  probes::dispersion_topk(ckpt.params, n, a.topk, a.topk_examples, rng));
  }
  log_line("[probe] dispersion done");
  return kExitOk;
}

int run_prop1(const Common& c, const probes::Prop1Config& pc) {
  const auto paths = claim_outputs(c, {"featstd.csv", "slope.json"});
  const std::uint64_t seed = c.seed_given ? c.seed : 0;
  Rng rng = make_stream(seed, "prop1");
  const auto result = probes::verify_prop1(pc, rng);
  for (const auto& w : result.fit.warnings) log_line("[prop1] warning: " + w);

  nlohmann::ordered_json params = {{"model_dim", pc.model_dim},
                                   {"vocab_size", pc.vocab_size},
                                   {"n_seqs", pc.n_seqs},
                                   {"feature", pc.feature},
                                   {"lengths", pc.lengths},
                                   {"seed", seed}};
  auto meta = metadata_for("prop1", c, params);
  auto os = open_out(paths[0]);
  probes::write_featstd_header(os, meta);
  for (const auto& r : result.rows) probes::write_featstd_rows(os, "prop1", r.length, {pc.feature}, {r.sigma});

  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  bool all_hold = true;
  for (const auto& r : result.rows) {
    rows.push_back({{"length", r.length}, {"sigma", r.sigma}, {"variance", r.variance},
                    {"max_weight", r.max_weight}, {"bound", r.bound}, {"bound_holds", r.bound_holds}});
    all_hold = all_hold && r.bound_holds;
  }
  nlohmann::ordered_json slope = {{"slope", result.fit.slope},
                                  {"intercept", result.fit.intercept},
                                  {"r2", result.fit.r2},
                                  {"n_points", result.fit.n_points},
                                  {"bound_holds", all_hold},
                                  {"params", params},
                                  {"rows", rows}};
  auto js = open_out(paths[1]);
  js << slope.dump(2) << '\n';
  log_line("[prop1] slope=" + csv::format_double(result.fit.slope) +
           " bound_holds=" + (all_hold ? std::string("true") : std::string("false")));
  return kExitOk;
}

int run_compare(const Common& c, const std::string& in, const std::string& va, const std::string& vb) {
  const auto rows = read_eval_csv(in);
  const auto paths = claim_outputs(c, {"compare.csv"});
  const auto cmp = stats::compare(rows, va, vb);
  auto meta = metadata_for("compare", c, nullptr);
  meta.emplace_back("in", fs::path(in).filename().string());
  meta.emplace_back("a", va);
  meta.emplace_back("b", vb);
  auto os = open_out(paths[0]);
  stats::write_compare_csv(os, cmp, meta);
  for (const auto& r : cmp) {
    log_line("[compare] " + std::string(task_name(r.task)) + " length=" + std::to_string(r.length) +
             " diff=" + csv::format_double(r.mean_diff) + " p=" + csv::format_double(r.test.p_value));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Length-generalization experiments for single-layer attention"};
  app.require_subcommand(1);

  Common common;

  auto* train_cmd = app.add_subcommand("train", "Train one model and write checkpoint.json");
  add_common(train_cmd, common);

  std::string checkpoint_path;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint across lengths into eval.csv");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint JSON")->required()->check(CLI::ExistingFile);

  int n_seeds = 10;
  std::string variants = "baseline,ln";
  bool keep = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train and evaluate variants over seeds into eval.csv");
  add_common(sweep_cmd, common);
  sweep_cmd->add_option("--seeds", n_seeds, "Number of seeds, starting at --seed");
  sweep_cmd->add_option("--variants", variants, "Comma-separated variants, e.g. baseline,std,ln,ln+adaptive");
  sweep_cmd->add_flag("--keep-checkpoints", keep, "Also write one checkpoint per (norm, seed)");

  ProbeArgs probe_args;
  auto* probe_cmd = app.add_subcommand("probe", "Feature spread, drift and dispersion of a checkpoint");
  add_common(probe_cmd, common);
  probe_cmd->add_option("--checkpoint", probe_args.checkpoint, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
  probe_cmd->add_option("--n-seqs", probe_args.drift_seqs, "Sequences per length for drift");
  probe_cmd->add_option("--feature-seqs", probe_args.feature_seqs, "Sequences per length for feature std");
  probe_cmd->add_option("--features", probe_args.features, "Tracked feature indices");
  probe_cmd->add_option("--topk", probe_args.topk, "Number of largest weights for dispersion");
  probe_cmd->add_option("--topk-examples", probe_args.topk_examples, "Examples averaged for dispersion");
  probe_cmd->add_flag("--dump-raw", probe_args.dump_raw, "Also write featdump.csv");
  probe_cmd->add_flag("--pre-norm", probe_args.pre_norm, "Read outputs before the normalization layer");

  probes::Prop1Config prop1_cfg;
  auto* prop1_cmd = app.add_subcommand("prop1", "Variance decay of frozen random attention");
  add_common(prop1_cmd, common);
  prop1_cmd->add_option("--dim", prop1_cfg.model_dim, "Model width");
  prop1_cmd->add_option("--vocab", prop1_cfg.vocab_size, "Vocabulary size");
  prop1_cmd->add_option("--n-seqs", prop1_cfg.n_seqs, "Sequences per length");
  prop1_cmd->add_option("--feature", prop1_cfg.feature, "Output feature to track");
  prop1_cmd->add_option("--lengths", prop1_cfg.lengths, "Sequence lengths, ascending");

  std::string compare_in, compare_a = "baseline", compare_b = "ln";
  auto* compare_cmd = app.add_subcommand("compare", "Paired t-tests between two variants of eval.csv");
  add_common(compare_cmd, common);
  compare_cmd->add_option("--in", compare_in, "eval.csv from sweep")->required()->check(CLI::ExistingFile);
  compare_cmd->add_option("--a", compare_a, "First variant label");
  compare_cmd->add_option("--b", compare_b, "Second variant label");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*train_cmd) return run_train(common);
    if (*eval_cmd) return run_eval(common, checkpoint_path);
    if (*sweep_cmd) return run_sweep(common, n_seeds, variants, keep);
    if (*probe_cmd) return run_probe(common, probe_args);
    if (*prop1_cmd) return run_prop1(common, prop1_cfg);
    if (*compare_cmd) return run_compare(common, compare_in, compare_a, compare_b);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PairingError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
