#pragma once

#include <functional>

#include "attnlab/numerics/tape.hpp"

namespace attnlab {

using ScalarFn = std::function<Var(Tape&, const Var&)>;

/// Worst componentwise relative error between the reverse-mode gradient of
/// `f` at `x` and central differences with step `h`. The relative error of a
/// component is |a − n| / max(1e−8, |a| + |n|).
double grad_check(const ScalarFn& f, const Tensor& x, double h = 1e-3);

}  // namespace attnlab
