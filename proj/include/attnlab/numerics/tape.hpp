#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "attnlab/numerics/tensor.hpp"

namespace attnlab {

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  std::size_t id() const noexcept { return id_; }
  Tape& tape() const noexcept { return *tape_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode autodiff record. Nodes are appended in evaluation order, so
/// every node's inputs precede it; backward() walks the list in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Value that never receives a gradient.
  Var constant(Tensor value);
  /// Owned leaf; its gradient lives on the tape and accumulates across
  /// backward() calls.
  Var leaf(Tensor value);
  /// Leaf bound to an external tensor; gradients accumulate into p.grad().
  /// `p` must outlive the tape and stay unmodified while it is in use.
  Var parameter(Tensor& p);

  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a node, allocated zeroed on first use.
  std::span<double> grad(std::size_t id);
  std::span<const double> grad_of(const Var& v) { return grad(v.id()); }

  /// Accumulates d(loss)/d(leaf) into every leaf reachable from `loss`.
  /// Throws ContractError when `loss` is not a single value.
  void backward(const Var& loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    Tensor* external = nullptr;
    std::vector<double> grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_leaf = false;
  };
  std::vector<Node> nodes_;
};

}  // namespace attnlab
