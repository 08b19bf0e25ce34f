#include "attnlab/numerics/tape.hpp"

#include <algorithm>

#include "attnlab/util/error.hpp"

namespace attnlab {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
  Node node;
  node.owned = std::move(value);
  node.is_leaf = true;
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::leaf(Tensor value) {
  Node node;
  node.owned = std::move(value);
  node.is_leaf = true;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Tensor& p) {
  Node node;
  node.external = &p;
  node.is_leaf = true;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  const std::size_t id = nodes_.size();
  Node node;
  node.owned = std::move(value);
  for (auto in : inputs) {
    if (in >= id) throw ContractError("tape input recorded after its consumer");
    node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
  }
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return {this, id};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.owned;
}

std::span<double> Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.external) return n.external->grad();
  if (n.grad.size() != n.owned.size()) n.grad.assign(n.owned.size(), 0.0);
  return n.grad;
}

void Tape::backward(const Var& loss) {
  if (loss.value().size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_string(loss.value().shape()));
  }
  for (auto& n : nodes_) {
    if (!n.is_leaf) std::fill(n.grad.begin(), n.grad.end(), 0.0);
  }
  if (!nodes_[loss.id()].requires_grad) return;
  grad(loss.id())[0] += 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.is_leaf || !n.requires_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, id);
  }
}

}  // namespace attnlab
