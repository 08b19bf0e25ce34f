#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string_view>
#include <vector>

#include "attnlab/util/rng.hpp"

namespace attnlab {

enum class TaskKind { argmax, dict };

std::string_view task_name(TaskKind task);
/// Accepts "argmax" or "dict"; throws ConfigError otherwise.
TaskKind parse_task(std::string_view name);

struct TaskConfig {
  TaskKind task = TaskKind::dict;
  int key_classes = 16384;   // key classes (dict) or priority classes (argmax)
  int value_classes = 64;
  int train_max_len = 16;

  /// Throws ConfigError when value_classes < 2 or key_classes < 1.
  void validate() const;
};

/// B sequences of N (key-or-priority class, value class) items. Classes are
/// 0-based; targets lie in [0, value_classes).
struct TaskBatch {
  TaskKind task = TaskKind::dict;
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<int> keys;     // batch × length
  std::vector<int> values;   // batch × length
  std::vector<int> queries;  // batch (dict) or empty (argmax)
  std::vector<int> targets;  // batch

  int key(std::size_t b, std::size_t n) const { return keys[b * length + n]; }
  int value(std::size_t b, std::size_t n) const { return values[b * length + n]; }

  /// FNV-1a digest of the batch contents.
  std::uint64_t hash() const;
};

/// Dictionary lookup: distinct keys per sequence, i.i.d. values, the query is
/// one of the sequence's keys and the target its value.
/// Throws CapacityError when N > key_classes.
TaskBatch gen_dict_batch(const TaskConfig& cfg, std::size_t batch, std::size_t length, Rng& rng);

/// Argmax retrieval: distinct priority classes per sequence, i.i.d. values,
/// the target is the value of the highest-priority item.
/// Throws CapacityError when N > key_classes.
TaskBatch gen_argmax_batch(const TaskConfig& cfg, std::size_t batch, std::size_t length, Rng& rng);

TaskBatch gen_batch(const TaskConfig& cfg, std::size_t batch, std::size_t length, Rng& rng);

/// Reference target for one sequence computed by a linear scan.
int scan_target(const TaskBatch& batch, std::size_t b);

/// seq_id,pos,key_class,value_class,query_key,target (query_key is -1 for argmax).
void write_batch_csv(std::ostream& os, const TaskBatch& batch);

}  // namespace attnlab
