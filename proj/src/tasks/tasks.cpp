#include "attnlab/tasks/tasks.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "attnlab/util/error.hpp"

namespace attnlab {

std::string_view task_name(TaskKind task) {
  return task == TaskKind::argmax ? "argmax" : "dict";
}

TaskKind parse_task(std::string_view name) {
  if (name == "argmax") return TaskKind::argmax;
  if (name == "dict") return TaskKind::dict;
  throw ConfigError("unknown task: " + std::string(name));
}

void TaskConfig::validate() const {
  if (value_classes < 2) throw ConfigError("value_classes must be >= 2");
  if (key_classes < 1) throw ConfigError("key_classes must be >= 1");
  if (train_max_len < 1) throw ConfigError("train_max_len must be >= 1");
  if (train_max_len > key_classes) throw ConfigError("train_max_len exceeds key_classes");
}

std::uint64_t TaskBatch::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::int64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= static_cast<std::uint64_t>(v >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::int64_t>(task));
  mix(static_cast<std::int64_t>(batch));
  mix(static_cast<std::int64_t>(length));
  for (int v : keys) mix(v);
  for (int v : values) mix(v);
  for (int v : queries) mix(v);
  for (int v : targets) mix(v);
  return h;
}

namespace {

TaskBatch sample_items(const TaskConfig& cfg, TaskKind task, std::size_t batch,
                       std::size_t length, Rng& rng) {
  if (length > static_cast<std::size_t>(cfg.key_classes)) {
    throw CapacityError("sequence length " + std::to_string(length) + " exceeds " +
                        std::to_string(cfg.key_classes) + " key classes");
  }
  TaskBatch out;
  out.task = task;
  out.batch = batch;
  out.length = length;
  out.keys.resize(batch * length);
  out.values.resize(batch * length);
  out.targets.resize(batch);

  // Partial Fisher-Yates over a persistent permutation: each prefix of
  // `length` draws is a uniform sample without replacement regardless of
  // the pool's current order.
  std::vector<int> pool(static_cast<std::size_t>(cfg.key_classes));
  std::iota(pool.begin(), pool.end(), 0);
  std::uniform_int_distribution<int> value_dist(0, cfg.value_classes - 1);
  const std::size_t pool_size = pool.size();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t n = 0; n < length; ++n) {
      std::uniform_int_distribution<std::size_t> pick(n, pool_size - 1);
      std::swap(pool[n], pool[pick(rng)]);
      out.keys[b * length + n] = pool[n];
    }
    for (std::size_t n = 0; n < length; ++n) out.values[b * length + n] = value_dist(rng);
  }
  return out;
}

}  // namespace

TaskBatch gen_dict_batch(const TaskConfig& cfg, std::size_t batch, std::size_t length, Rng& rng) {
  TaskBatch out = sample_items(cfg, TaskKind::dict, batch, length, rng);
  out.queries.resize(batch);
  if (length == 0) return out;
  std::uniform_int_distribution<std::size_t> pos(0, length - 1);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t p = pos(rng);
    out.queries[b] = out.key(b, p);
    out.targets[b] = out.value(b, p);
  }
  return out;
}

TaskBatch gen_argmax_batch(const TaskConfig& cfg, std::size_t batch, std::size_t length,
                           Rng& rng) {
  TaskBatch out = sample_items(cfg, TaskKind::argmax, batch, length, rng);
  if (length == 0) return out;
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t best = 0;
    for (std::size_t n = 1; n < length; ++n) {
      if (out.key(b, n) > out.key(b, best)) best = n;
    }
    out.targets[b] = out.value(b, best);
  }
  return out;
}

TaskBatch gen_batch(const TaskConfig& cfg, std::size_t batch, std::size_t length, Rng& rng) {
  return cfg.task == TaskKind::dict ? gen_dict_batch(cfg, batch, length, rng)
                                    : gen_argmax_batch(cfg, batch, length, rng);
}

int scan_target(const TaskBatch& batch, std::size_t b) {
  if (batch.task == TaskKind::dict) {
    for (std::size_t n = 0; n < batch.length; ++n) {
      if (batch.key(b, n) == batch.queries[b]) return batch.value(b, n);
    }
    return -1;
  }
  int best_key = -1, best_value = -1;
  for (std::size_t n = 0; n < batch.length; ++n) {
    if (batch.key(b, n) > best_key) {
      best_key = batch.key(b, n);
      best_value = batch.value(b, n);
    }
  }
  return best_value;
}

void write_batch_csv(std::ostream& os, const TaskBatch& batch) {
  os << "seq_id,pos,key_class,value_class,query_key,target\n";
  for (std::size_t b = 0; b < batch.batch; ++b) {
    const int query = batch.queries.empty() ? -1 : batch.queries[b];
    for (std::size_t n = 0; n < batch.length; ++n) {
      os << b << ',' << n << ',' << batch.key(b, n) << ',' << batch.value(b, n) << ',' << query
         << ',' << batch.targets[b] << '\n';
    }
  }
}

}  // namespace attnlab
