#pragma once

#include <string>
#include <string_view>

#include "attnlab/tasks/tasks.hpp"

namespace attnlab {

/// Post-attention normalization applied to O before the output projection.
enum class NormMode { none, standardize, layernorm };

std::string_view norm_name(NormMode mode);
/// Accepts none|standardize|layernorm and the short forms baseline|std|ln.
NormMode parse_norm(std::string_view name);

/// Label used in sweep tables: baseline, std, ln, with "+adaptive" appended
/// for test-time temperature adaptation.
std::string variant_label(NormMode mode, bool adaptive);

struct TempMode {
  bool adaptive = false;
  double reference_entropy = 0.0;

  static TempMode fixed() { return {}; }
  static TempMode matching(double reference_entropy) { return {true, reference_entropy}; }
};

struct ModelConfig {
  TaskKind task = TaskKind::dict;
  int model_dim = 64;
  int key_dim = 48;
  int hidden_dim = 128;
  int key_classes = 16384;
  int value_classes = 64;
  NormMode norm = NormMode::none;
  double norm_eps = 1e-5;

  int value_dim() const { return model_dim - key_dim; }
  /// Throws ConfigError on inconsistent widths or class counts.
  void validate() const;
};

}  // namespace attnlab
