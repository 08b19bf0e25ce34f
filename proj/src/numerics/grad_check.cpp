#include "attnlab/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "attnlab/util/error.hpp"

namespace attnlab {
namespace {

double evaluate(const ScalarFn& f, const Tensor& x) {
  Tape tape;
  const Var xv = tape.constant(x);
  return f(tape, xv).value()[0];
}

}  // namespace

double grad_check(const ScalarFn& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw ContractError("grad_check: step must be positive");
  Tape tape;
  const Var xv = tape.leaf(x);
  const Var loss = f(tape, xv);
  tape.backward(loss);
  const auto analytic = tape.grad(xv.id());

  double worst = 0.0;
  Tensor probe = x;
  probe.drop_grad();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = evaluate(f, probe);
    probe[i] = orig - h;
    const double down = evaluate(f, probe);
    probe[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace attnlab
