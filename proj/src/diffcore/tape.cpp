#include "gdvae/diffcore/tape.hpp"

#include "gdvae/errors.hpp"

namespace gdvae::diff {

Parameter::Parameter(std::string n, Tensor init)
    : name(std::move(n)),
      value(std::move(init)),
      grad(value.shape()),
      first_moment(value.shape()),
      second_moment(value.shape()) {}

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, {}, &p, true});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  if (!value.all_finite()) throw NonFiniteError("tape: non-finite value produced at node " + std::to_string(nodes_.size()));
  bool needs = false;
  for (auto id : inputs) {
    if (id >= nodes_.size()) throw ShapeError("tape: input node recorded after its consumer");
    needs = needs || nodes_[id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, std::move(inputs), std::move(backward), nullptr, needs});
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  auto& node = nodes_.at(id);
  if (node.grad.empty() && !node.value.empty()) node.grad = Tensor(node.value.shape());
  return node.grad;
}

void Tape::backward(Var out) {
  if (out.tape != this) throw ShapeError("backward: variable from another tape");
  if (value(out).size() != 1) throw ShapeError("backward: output must be scalar, got " + to_string(value(out).shape()));
  grad(out.id).fill(1.0);
  for (std::size_t i = out.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.param != nullptr) {
      if (node.param->grad.size() != node.grad.size()) node.param->grad = Tensor(node.param->value.shape());
      node.param->grad += node.grad;
    } else if (node.backward) {
      node.backward(*this, i);
    }
  }
}

}  // namespace gdvae::diff
