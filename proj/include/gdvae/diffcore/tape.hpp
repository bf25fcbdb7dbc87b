#pragma once

#include "gdvae/diffcore/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gdvae::diff {

/// Trainable tensor together with its gradient accumulator and Adam moments.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor init);

  std::string name;
  Tensor value;
  Tensor grad;
  Tensor first_moment;
  Tensor second_moment;
  std::int64_t step = 0;

  void zero_grad() { grad.fill(0.0); }
};

class Tape;

/// Handle to a node recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Records the forward computation as a topologically ordered list of nodes and
/// replays it backwards. One tape per forward pass; not thread-safe.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a parameter; backward() accumulates into `p.grad`.
  Var parameter(Parameter& p);

  /// Append a node computed from `inputs`. Inputs must already be on this tape.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  const Tensor& value(Var v) const { return value(v.id); }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }

  /// Gradient buffer of a node, zero-allocated on first access.
  Tensor& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return !nodes_.at(id).grad.empty(); }

  /// Reverse sweep seeded with d(out)/d(out) = 1. `out` must hold one element.
  void backward(Var out);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

}  // namespace gdvae::diff
