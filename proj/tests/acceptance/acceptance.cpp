// Acceptance run: one PASS/FAIL line per criterion, detail lines indented.
// Usage: attnlab_acceptance [--only 1,4,...] [--out DIR]
// The sweep and probe CSVs land in DIR (default: ./acceptance_results).

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "attnlab/harness/evaluate.hpp"
#include "attnlab/harness/run_config.hpp"
#include "attnlab/harness/sweep.hpp"
#include "attnlab/harness/train.hpp"
#include "attnlab/model/attention.hpp"
#include "attnlab/model/forward.hpp"
#include "attnlab/numerics/grad_check.hpp"
#include "attnlab/numerics/ops.hpp"
#include "attnlab/probes/probes.hpp"
#include "attnlab/simd/kernels.hpp"
#include "attnlab/stats/stats.hpp"
#include "attnlab/util/error.hpp"

using namespace attnlab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void detail(const std::string& s) { std::cout << "    " << s << '\n' << std::flush; }

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << std::fixed << v;
  return os.str();
}

struct Outcome {
  bool pass = false;
  std::string summary;
};

// ---- shared helpers ---------------------------------------------------------------------

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> d(0.0, scale);
  for (double& v : t.data()) v = d(rng);
  return t;
}

Var weighted_sum(Tape& tape, const Var& v, const Tensor& w) { return ops::sum(ops::mul(v, tape.constant(w))); }

double oracle_t_sf(double t, int df) {
  const double nu = df;
  const double log_norm =
      std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) - 0.5 * std::log(nu * std::numbers::pi);
  auto pdf = [&](double x) { return std::exp(log_norm - (nu + 1) / 2 * std::log1p(x * x / nu)); };
  boost::math::quadrature::exp_sinh<double> tail;
  return 2.0 * tail.integrate(pdf, std::abs(t), std::numeric_limits<double>::infinity());
}

// ---- 1: gradients -------------------------------------------------------------------------

constexpr double kGradTol = 1e-4;

// Central differences that straddle the ReLU kink do not estimate a
// derivative; instances are redrawn until every pre-activation clears it.
double relu_margin(ModelParams& p, const TaskBatch& batch) {
  Tape tape;
  const ForwardGraph g = forward_graph(bind(tape, p), p.config, batch);
  const Tensor pre = ops::matmul(ops::matmul(g.output.value(), p.w_out), p.mlp_hidden);
  double m = INFINITY;
  for (std::size_t r = 0; r < pre.rows(); ++r)
    for (std::size_t c = 0; c < pre.cols(); ++c) m = std::min(m, std::abs(pre.at(r, c) + p.mlp_hidden_bias[c]));
  return m;
}

double model_loss_error(TaskKind task, NormMode norm, std::uint64_t inst, double h) {
  ModelConfig c;
  c.task = task;
  c.model_dim = 8;
  c.key_dim = 6;
  c.hidden_dim = 8;
  c.key_classes = 32;
  c.value_classes = 4;
  c.norm = norm;
  TaskConfig tc;
  tc.task = task;
  tc.key_classes = c.key_classes;
  tc.value_classes = c.value_classes;
  for (std::uint64_t attempt = 0;; ++attempt) {
    const std::uint64_t s = 7000 + inst * 1000 + attempt;
    Rng init = make_stream(s, "init");
    ModelParams p = ModelParams::init(c, init);
    std::mt19937_64 rng(s);
    for (Tensor* t : {&p.gamma, &p.beta, &p.mlp_hidden_bias})
      for (double& v : t->data()) v += std::normal_distribution<double>(0.0, 0.3)(rng);
    Rng data = make_stream(s, "batch");
    const TaskBatch batch = gen_batch(tc, 4, 4, data);
    if (relu_margin(p, batch) < 5e-3) continue;

    double worst = 0.0;
    for (auto& [name, tensor] : p.named()) {
      const std::string target = name;
      const ScalarFn f = [&p, &batch, target](Tape& tape, const Var& xv) {
        ModelVars vars = bind(tape, p);
        if (target == "w_query") vars.w_query = xv;
        else if (target == "w_key") vars.w_key = xv;
        else if (target == "w_value") vars.w_value = xv;
        else if (target == "w_out") vars.w_out = xv;
        else if (target == "gamma") vars.gamma = xv;
        else if (target == "beta") vars.beta = xv;
        else if (target == "key_embedding") vars.key_embedding = xv;
        else if (target == "value_embedding") vars.value_embedding = xv;
        else if (target == "query_vector") vars.query_vector = xv;
        else if (target == "mlp_hidden") vars.mlp_hidden = xv;
        else if (target == "mlp_hidden_bias") vars.mlp_hidden_bias = xv;
        else if (target == "mlp_out") vars.mlp_out = xv;
        return ops::cross_entropy_mean(forward_graph(vars, p.config, batch).logits, batch.targets);
      };
      worst = std::max(worst, grad_check(f, *tensor, h));
    }
    return worst;
  }
}

Outcome criterion_gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(99);
  std::map<std::string, double> worst;
  auto check = [&](const std::string& op, const ScalarFn& f, const Tensor& x) {
    worst[op] = std::max(worst[op], grad_check(f, x, 1e-3));
  };
  const std::vector<int> idx = {2, 0, 2, 4};
  const std::vector<int> targets = {1, 0, 3, 3};
  for (int i = 0; i < 10; ++i) {
    const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 5}, rng), w35 = random_tensor({3, 5}, rng);
    check("matmul", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::matmul(x, t.constant(b)), w35); }, a);
    check("matmul", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::matmul(t.constant(a), x), w35); }, b);
    const Tensor w53 = random_tensor({5, 3}, rng), a35 = random_tensor({3, 5}, rng);
    check("transpose", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::transpose(x), w53); }, a35);

    const Tensor e = random_tensor({2, 3}, rng), f = random_tensor({2, 3}, rng), w23 = random_tensor({2, 3}, rng);
    check("add", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::add(x, t.constant(f)), w23); }, e);
    check("mul", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::mul(x, x), w23); }, e);
    check("scale", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::scale(x, -1.7), w23); }, e);

    const Tensor m = random_tensor({4, 3}, rng), r = random_tensor({3}, rng), w43 = random_tensor({4, 3}, rng);
    check("add_row", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::add_row(t.constant(m), x), w43); }, r);
    check("mul_row", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::mul_row(x, t.constant(r)), w43); }, m);
    check("mul_row", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::mul_row(t.constant(m), x), w43); }, r);

    Tensor k = random_tensor({3, 6}, rng);
    for (double& v : k.data()) v = v >= 0 ? v + 0.01 : v - 0.01;
    const Tensor w36 = random_tensor({3, 6}, rng);
    check("relu", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::relu(x), w36); }, k);

    const Tensor table = random_tensor({5, 3}, rng);
    check("gather_rows", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::gather_rows(x, idx), w43); }, table);
    const Tensor c1 = random_tensor({4, 2}, rng), c2 = random_tensor({4, 3}, rng), w45 = random_tensor({4, 5}, rng);
    check("concat_cols", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::concat_cols(x, t.constant(c2)), w45); }, c1);
    check("concat_cols", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::concat_cols(t.constant(c1), x), w45); }, c2);
    const Tensor row = random_tensor({1, 3}, rng);
    check("repeat_rows", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::repeat_rows(x, 5), w53); }, row);

    const Tensor s = random_tensor({3, 7}, rng, 2.0), w37 = random_tensor({3, 7}, rng);
    check("softmax_rows", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::softmax_rows(x, 1.0), w37); }, s);
    check("softmax_rows", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::softmax_rows(x, 2.5), w37); }, s);
    const Tensor z = random_tensor({3, 8}, rng), w38 = random_tensor({3, 8}, rng);
    check("standardize_rows", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::standardize_rows(x, 1e-5), w38); }, z);

    const Tensor items = random_tensor({12, 5}, rng), queries = random_tensor({3, 5}, rng);
    const Tensor w34 = random_tensor({3, 4}, rng), pw = random_tensor({3, 4}, rng);
    check("batched_scores", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::batched_scores(x, t.constant(queries)), w34); }, items);
    check("batched_scores", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::batched_scores(t.constant(items), x), w34); }, queries);
    check("batched_weighted_sum", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::batched_weighted_sum(x, t.constant(items)), w35); }, pw);
    check("batched_weighted_sum", [&](Tape& t, const Var& x) { return weighted_sum(t, ops::batched_weighted_sum(t.constant(pw), x), w35); }, items);

    const Tensor logits = random_tensor({4, 5}, rng, 2.0);
    check("cross_entropy_mean", [&](Tape&, const Var& x) { return ops::cross_entropy_mean(x, targets); }, logits);
  }
  bool ok = true;
  double op_worst = 0.0;
  for (const auto& [op, e] : worst) {
    ok = ok && e <= kGradTol;
    op_worst = std::max(op_worst, e);
    if (e > kGradTol) detail("op " + op + " rel error " + std::to_string(e));
  }
  detail(std::to_string(worst.size()) + " ops x 10 instances, worst rel error " + std::to_string(op_worst));

  double model_worst = 0.0;
  for (auto task : {TaskKind::dict, TaskKind::argmax}) {
    for (auto norm : {NormMode::none, NormMode::standardize, NormMode::layernorm}) {
      double w = 0.0;
      for (std::uint64_t inst = 0; inst < 10; ++inst) w = std::max(w, model_loss_error(task, norm, inst, 1e-4));
      detail("full loss " + std::string(task_name(task)) + "/" + std::string(norm_name(norm)) +
             " worst rel error " + std::to_string(w));
      model_worst = std::max(model_worst, w);
    }
  }
  ok = ok && model_worst <= kGradTol;
  const double secs = seconds_since(t0);
  ok = ok && secs < 30.0;
  return {ok, "ops worst " + std::to_string(op_worst) + ", full model worst " + std::to_string(model_worst) +
                  " (tol 1e-4), " + fmt(secs, 1) + " s (limit 30 s)"};
}

// ---- 2: frozen random attention --------------------------------------------------------------

Outcome criterion_prop1(const fs::path& out) {
  const auto t0 = Clock::now();
  probes::Prop1Config cfg;  // D=64, vocab 1024, 100 sequences, N = 16 … 4096
  Rng rng = make_stream(0, "prop1");
  const probes::Prop1Result r = probes::verify_prop1(cfg, rng);
  bool bounds = true;
  for (const auto& row : r.rows) {
    bounds = bounds && row.bound_holds;
    detail("N=" + std::to_string(row.length) + " sigma=" + fmt(row.sigma, 6) + " var=" + fmt(row.variance, 8) +
           " bound=" + fmt(row.bound, 8) + (row.bound_holds ? "" : " VIOLATED"));
  }
  std::ofstream os(out / "prop1_featstd.csv");
  probes::write_featstd_header(os, {{"command", "acceptance"}});
  for (const auto& row : r.rows) probes::write_featstd_rows(os, "prop1", row.length, {cfg.feature}, {row.sigma});
  const double secs = seconds_since(t0);
  const bool ok = r.fit.slope >= -0.65 && r.fit.slope <= -0.35 && bounds && secs < 120.0;
  return {ok, "slope " + fmt(r.fit.slope, 3) + " (want [-0.65, -0.35]), bound " + (bounds ? "holds" : "fails") +
                  " at all " + std::to_string(r.rows.size()) + " lengths, " + fmt(secs, 1) + " s (limit 120 s)"};
}

// ---- 3: normalization algebra ------------------------------------------------------------------

Outcome criterion_normalization() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> width(2, 64);
  std::uniform_real_distribution<double> scale(0.01, 100.0), shift(-100.0, 100.0);
  double err_moments = 0.0, err_affine = 0.0, err_compose = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto d = static_cast<std::size_t>(width(rng));
    const Tensor o = random_tensor({1, d}, rng, 5.0);
    const Tensor s = normalize_output(o, NormMode::standardize, Tensor(), Tensor(), 0.0);
    double mean = 0.0, var = 0.0;
    for (double v : s.data()) mean += v;
    mean /= static_cast<double>(d);
    for (double v : s.data()) var += (v - mean) * (v - mean);
    err_moments = std::max({err_moments, std::abs(mean), std::abs(std::sqrt(var / static_cast<double>(d)) - 1.0)});

    Tensor moved = o;
    const double a = scale(rng), b = shift(rng);
    for (double& v : moved.data()) v = a * v + b;
    const Tensor s2 = normalize_output(moved, NormMode::standardize, Tensor(), Tensor(), 0.0);
    for (std::size_t i = 0; i < d; ++i) err_affine = std::max(err_affine, std::abs(s[i] - s2[i]));

    const Tensor gamma = random_tensor({d}, rng), beta = random_tensor({d}, rng);
    const Tensor ln = normalize_output(o, NormMode::layernorm, gamma, beta, 1e-5);
    const Tensor st = normalize_output(o, NormMode::standardize, gamma, beta, 1e-5);
    for (std::size_t i = 0; i < d; ++i) err_compose = std::max(err_compose, std::abs(ln[i] - (gamma[i] * st[i] + beta[i])));
  }
  const bool ok = err_moments <= 1e-9 && err_affine <= 1e-9 && err_compose <= 1e-9;
  std::ostringstream os;
  os << "1000 vectors: moments err " << err_moments << ", affine err " << err_affine << ", layernorm composition err "
     << err_compose << " (tol 1e-9)";
  return {ok, os.str()};
}

// ---- 8: statistics oracle -------------------------------------------------------------------

Outcome criterion_stats() {
  double grid_err = 0.0;
  for (double t : {0.5, 1.0, 2.0, 5.0})
    for (int df : {1, 9, 99}) grid_err = std::max(grid_err, std::abs(stats::t_sf(t, df) - oracle_t_sf(t, df)));

  // Paired fixtures; t and p recomputed from first principles.
  const std::vector<std::pair<std::vector<double>, std::vector<double>>> fixtures = {
      {{2.1, 1.9, 2.0, 2.2, 1.8}, {1.0, 1.0, 1.0, 1.0, 1.0}},
      {{71.2, 65.0, 80.3, 77.7, 60.1, 69.9}, {70.0, 66.1, 75.2, 70.4, 58.8, 69.0}},
      {{0.5, 0.7, 0.2, 0.9}, {0.6, 0.4, 0.3, 0.5}},
  };
  double rel_err = 0.0;
  for (const auto& [a, b] : fixtures) {
    const std::size_t n = a.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
    const double t = mean / std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    const double p = oracle_t_sf(t, static_cast<int>(n) - 1);
    const auto r = stats::paired_t_test(a, b);
    rel_err = std::max({rel_err, std::abs(r.t_stat - t) / std::abs(t), std::abs(r.p_value - p) / p});
    detail("fixture n=" + std::to_string(n) + " t=" + fmt(r.t_stat, 4) + " p=" + std::to_string(r.p_value));
  }
  const bool ok = grid_err <= 1e-9 && rel_err <= 1e-6;
  std::ostringstream os;
  os << "t_sf grid max abs err " << grid_err << " (tol 1e-9), paired fixtures max rel err " << rel_err
     << " (tol 1e-6)";
  return {ok, os.str()};
}

// ---- reduced sweeps ---------------------------------------------------------------------------

struct SweepData {
  SweepResult result;
  std::vector<int> lengths;
  std::vector<std::uint64_t> seeds;
  bool ok = false;
  std::string error;
};

RunConfig reduced(TaskKind task) {
  RunConfig c;
  c.task = task;
  c.key_classes = 16384;  // the evaluation grid reaches 2^14 distinct keys
  c.steps = 5000;
  c.batch_size = 128;
  c.eval_lengths = default_eval_lengths();
  c.eval_examples = 4096;
  return c;
}

SweepData run_sweep(TaskKind task, const std::vector<std::string>& variant_labels, const fs::path& out,
                    std::vector<Checkpoint>* seed0_models = nullptr) {
  SweepData d;
  const RunConfig cfg = reduced(task);
  d.lengths = cfg.eval_lengths;
  for (std::uint64_t s = 0; s < 10; ++s) d.seeds.push_back(s);
  std::vector<Variant> variants;
  for (const auto& v : variant_labels) variants.push_back(parse_variant(v));
  SweepOptions opts;
  opts.jobs = 1;
  opts.keep_checkpoints = seed0_models != nullptr;
  opts.log = [](const std::string& line) { std::cerr << line << '\n'; };
  const auto t0 = Clock::now();
  d.result = sweep(cfg, d.seeds, variants, opts);
  detail(std::string(task_name(task)) + " sweep: " + std::to_string(d.result.runs.size()) + " runs in " +
         fmt(seconds_since(t0) / 60.0, 1) + " min");
  for (auto& run : d.result.runs) {
    if (!run.error.empty()) d.error += " seed " + std::to_string(run.seed) + ": " + run.error;
    if (seed0_models && run.seed == 0 && run.checkpoint) seed0_models->push_back(*run.checkpoint);
  }
  std::ofstream os(out / (std::string(task_name(task)) + "_eval.csv"));
  write_eval_csv(os, d.result.rows, {{"command", "acceptance"}, {"config", to_json(cfg).dump()}});
  d.ok = d.error.empty();
  return d;
}

// Mean percent accuracy of a variant at a length.
double mean_at(const std::vector<stats::MeanRow>& table, const std::string& variant, int length) {
  for (const auto& m : table)
    if (m.variant == variant && m.length == length) return m.mean_percent;
  throw ContractError("no mean for " + variant + " at " + std::to_string(length));
}

void print_table(const std::vector<stats::MeanRow>& table, const std::vector<int>& lengths,
                 const std::vector<std::string>& variants) {
  std::string head = "N      ";
  for (const auto& v : variants) head += " " + v + std::string(std::max<int>(1, 10 - static_cast<int>(v.size())), ' ');
  detail(head);
  for (int n : lengths) {
    std::string line = std::to_string(n);
    line.resize(7, ' ');
    for (const auto& v : variants) line += " " + fmt(mean_at(table, v, n), 2) + "     ";
    detail(line);
  }
}

Outcome criterion_dict(const SweepData& d, const fs::path& out) {
  if (!d.ok) return {false, "sweep failed:" + d.error};
  const auto table = stats::mean_table(d.result.rows);
  print_table(table, d.lengths, {"baseline", "ln"});
  const double in_dist = mean_at(table, "baseline", 16) / 100.0;
  bool ln_ge = true;
  std::string worst_gap;
  for (int n : d.lengths) {
    if (n < 512) continue;
    const double gap = mean_at(table, "ln", n) - mean_at(table, "baseline", n);
    if (gap < 0) {
      ln_ge = false;
      worst_gap += " N=" + std::to_string(n) + ":" + fmt(gap, 2);
    }
  }
  const auto cmp = stats::compare(d.result.rows, "ln", "baseline");
  std::ofstream os(out / "dict_compare.csv");
  stats::write_compare_csv(os, cmp, {{"command", "acceptance"}});
  double p4096 = 1.0, diff4096 = 0.0;
  for (const auto& r : cmp) {
    if (r.length == 4096) {
      p4096 = r.test.p_value;
      diff4096 = r.mean_diff;
    }
  }
  const bool a = in_dist >= 0.95, b = ln_ge, c = p4096 < 0.05;
  std::ostringstream s;
  s << "(a) baseline acc@16 " << fmt(in_dist, 4) << (a ? " >= " : " < ") << "0.95; (b) ln >= baseline at N>=512 "
    << (b ? "yes" : "no," + worst_gap) << "; (c) paired p@4096 " << p4096 << " (ln-baseline " << fmt(diff4096, 2)
    << " points)";
  return {a && b && c, s.str()};
}

Outcome criterion_argmax(const SweepData& d) {
  if (!d.ok) return {false, "sweep failed:" + d.error};
  const auto table = stats::mean_table(d.result.rows);
  print_table(table, d.lengths, {"baseline", "ln", "std"});
  std::vector<double> x, y;
  for (int n : d.lengths) {
    x.push_back(n);
    y.push_back(mean_at(table, "baseline", n));
  }
  const double rho = stats::spearman(x, y);
  const double ln = mean_at(table, "ln", 4096), base = mean_at(table, "baseline", 4096);
  const bool ok = rho < -0.9 && ln >= base && x.size() == 11;
  return {ok, "baseline Spearman rho " + fmt(rho, 3) + " over " + std::to_string(x.size()) +
                  " lengths (want < -0.9); ln " + fmt(ln, 2) + " vs baseline " + fmt(base, 2) + " at N=4096"};
}

// ---- 6: distribution-shift probes --------------------------------------------------------------

Outcome criterion_probes(const std::vector<Checkpoint>& models, const fs::path& out) {
  const auto t0 = Clock::now();
  const Checkpoint* base = nullptr;
  const Checkpoint* ln = nullptr;
  for (const auto& m : models) {
    if (m.params.config.norm == NormMode::none) base = &m;
    if (m.params.config.norm == NormMode::layernorm) ln = &m;
  }
  if (!base || !ln) return {false, "seed-0 baseline and layernorm checkpoints missing"};

  const std::vector<int> lengths = {16, 32, 64, 128, 256, 512, 1024, 2048, 4096};
  constexpr int kSeqs = 2048;
  const auto base_drift = probes::drift_curve(base->params, lengths, kSeqs, 16, 0);
  const auto ln_drift = probes::drift_curve(ln->params, lengths, kSeqs, 16, 0);
  std::ofstream drift_os(out / "drift.csv");
  probes::write_drift_header(drift_os, {{"command", "acceptance"}, {"n_seqs", std::to_string(kSeqs)}});
  probes::write_drift_rows(drift_os, "none", base_drift);
  probes::write_drift_rows(drift_os, "layernorm", ln_drift);

  const double base_ratio = base_drift.back().global_var / base_drift.front().global_var;
  const double ln_ratio = ln_drift.back().global_var / ln_drift.front().global_var;
  detail("global_var baseline: N=16 " + fmt(base_drift.front().global_var, 6) + ", N=4096 " +
         fmt(base_drift.back().global_var, 6));
  detail("global_var layernorm: N=16 " + fmt(ln_drift.front().global_var, 6) + ", N=4096 " +
         fmt(ln_drift.back().global_var, 6));

  std::ofstream disp_os(out / "dispersion.csv");
  probes::write_dispersion_header(disp_os, {{"command", "acceptance"}});
  double top1_short = 0.0, top1_long = 0.0;
  for (int n : lengths) {
    Rng rng = make_stream(0, "probe.dispersion", static_cast<std::uint64_t>(n));
    const auto topk = probes::dispersion_topk(base->params, n, 16, 64, rng);
    probes::write_dispersion_rows(disp_os, "none", n, topk);
    if (n == 16) top1_short = topk[0];
    if (n == 4096) top1_long = topk[0];
  }
  const double secs = seconds_since(t0);
  const bool a = base_drift.back().global_var < base_drift.front().global_var;
  const bool b = std::abs(std::log(ln_ratio)) < std::abs(std::log(base_ratio));
  const bool c = top1_long < top1_short;
  const bool ok = a && b && c && secs < 600.0;
  return {ok, "baseline global_var ratio 4096/16 " + fmt(base_ratio, 4) + "; |ln ratio| ln " +
                  fmt(std::abs(std::log(ln_ratio)), 4) + " vs baseline " + fmt(std::abs(std::log(base_ratio)), 4) +
                  "; top-1 weight " + fmt(top1_short, 4) + " -> " + fmt(top1_long, 4) + "; " + fmt(secs, 1) +
                  " s (limit 600 s)"};
}

// ---- 7: standardization ablation ---------------------------------------------------------------

Outcome criterion_ablation(const SweepData& d, const fs::path& out) {
  if (!d.ok) return {false, "sweep failed:" + d.error};
  const auto vs_base = stats::compare(d.result.rows, "std", "baseline");
  const auto vs_ln = stats::compare(d.result.rows, "std", "ln");
  {
    std::ofstream os(out / "argmax_compare.csv");
    stats::write_compare_csv(os, stats::compare(d.result.rows, "ln", "baseline"), {{"command", "acceptance"}});
    stats::write_compare_csv(os, vs_base);
    stats::write_compare_csv(os, vs_ln);
  }
  // Per-seed differences std − ln give the noise scale: two standard errors.
  std::map<std::pair<int, std::uint64_t>, std::map<std::string, double>> acc;
  for (const auto& r : d.result.rows) acc[{r.length, r.seed}][variant_label(r.norm_mode, r.adaptive)] = 100 * r.accuracy;
  bool beats = true, within = true;
  for (int n : {1024, 2048, 4096}) {
    double gain = 0.0, excess = 0.0;
    for (const auto& r : vs_base)
      if (r.length == n) gain = r.mean_diff;
    for (const auto& r : vs_ln)
      if (r.length == n) excess = r.mean_diff;
    std::vector<double> diffs;
    for (const auto& [key, m] : acc)
      if (key.first == n) diffs.push_back(m.at("std") - m.at("ln"));
    const double k = static_cast<double>(diffs.size());
    const double mu = std::accumulate(diffs.begin(), diffs.end(), 0.0) / k;
    double ss = 0.0;
    for (double v : diffs) ss += (v - mu) * (v - mu);
    const double noise = 2.0 * std::sqrt(ss / (k - 1.0) / k);
    beats = beats && gain > 0;
    within = within && excess <= noise;
    detail("N=" + std::to_string(n) + ": std-baseline " + fmt(gain, 2) + " points, std-ln " + fmt(excess, 2) +
           " points, noise (2 SE) " + fmt(noise, 2));
  }
  return {beats && within, std::string("std beats baseline at N=1024..4096: ") + (beats ? "yes" : "no") +
                               "; std exceeds ln by at most noise: " + (within ? "yes" : "no") +
                               " (direction-only criterion)"};
}

std::set<int> parse_only(int argc, char** argv, fs::path& out) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else if (a == "--out" && i + 1 < argc) {
      out = argv[++i];
    } else {
      throw ConfigError("unknown argument " + a);
    }
  }
  if (only.empty()) only = {1, 2, 3, 4, 5, 6, 7, 8};
  return only;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = "acceptance_results";
  std::set<int> only;
  try {
    only = parse_only(argc, argv, out);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  fs::create_directories(out);
  std::cout << "simd: " << simd::isa_name(simd::kernels().isa) << "\n" << std::flush;

  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& body) {
    if (!only.count(id)) return;
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << o.summary << "\n"
              << std::flush;
  };

  report(1, "autodiff correctness", criterion_gradients);
  report(2, "variance decay of random attention", [&] { return criterion_prop1(out); });
  report(3, "normalization algebra", criterion_normalization);
  report(8, "statistics oracle", criterion_stats);

  std::vector<Checkpoint> dict_models;
  SweepData dict, argmax;
  if (only.count(4) || only.count(6)) {
    try {
      dict = run_sweep(TaskKind::dict, {"baseline", "ln"}, out, &dict_models);
    } catch (const std::exception& e) {
      dict.error = e.what();
    }
  }
  report(4, "reduced dictionary sweep", [&] { return criterion_dict(dict, out); });
  report(6, "distribution-shift probes", [&] { return criterion_probes(dict_models, out); });

  if (only.count(5) || only.count(7)) {
    try {
      argmax = run_sweep(TaskKind::argmax, {"baseline", "ln", "std"}, out);
    } catch (const std::exception& e) {
      argmax.error = e.what();
    }
  }
  report(5, "reduced argmax sweep", [&] { return criterion_argmax(argmax); });
  report(7, "standardization ablation", [&] { return criterion_ablation(argmax, out); });

  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criterion(s) failed" : "acceptance: all passed")
            << "\n";
  return failures ? 1 : 0;
}
