#pragma once

// Data-parallel inner loops shared by the tape ops, the evaluation fast path
// and the optimizer. Every kernel has a scalar reference implementation; wider
// variants are selected once at startup from what the CPU reports.

#include <cstddef>
#include <span>
#include <string_view>

namespace attnlab::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct AdamCoefficients {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^t
  double bias2;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;
  double (*dot)(std::span<const double> a, std::span<const double> b);
  // y += alpha * x
  void (*axpy)(double alpha, std::span<const double> x, std::span<double> y);
  double (*max)(std::span<const double> x);
  // out[i] = exp(scale * (in[i] - shift)); returns the sum of out.
  double (*exp_shift_sum)(std::span<const double> in, double shift, double scale,
                          std::span<double> out);
  // In-place Adam update over one parameter buffer.
  void (*adam_update)(std::span<double> param, std::span<const double> grad,
                      std::span<double> m, std::span<double> v,
                      const AdamCoefficients& c);
};

/// Kernel table for the best ISA the host supports, unless overridden by the
/// ATTNLAB_SIMD environment variable ("scalar" or "avx2") or force_isa().
const KernelTable& kernels();

/// Kernel table for a specific ISA. Throws std::runtime_error when the ISA is
/// not compiled in or not supported by this CPU.
const KernelTable& kernels_for(Isa isa);

bool isa_available(Isa isa);

/// Pins the dispatch to `isa` for the rest of the process.
void force_isa(Isa isa);

namespace detail {
const KernelTable& scalar_table();
#if defined(ATTNLAB_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
}  // namespace detail

}  // namespace attnlab::simd
