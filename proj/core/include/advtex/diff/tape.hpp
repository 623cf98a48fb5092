#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "advtex/diff/tensor.hpp"

namespace advtex::diff {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  /// Accumulated gradient of a requires_grad leaf (zeros if never reached).
  const Tensor& grad() const;
  bool requires_grad() const;
  double item() const { return value().item(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Wengert list for reverse-mode differentiation. Nodes are appended in
/// evaluation order, so every input id precedes its consumer and the graph is
/// acyclic by construction. A tape is single-writer.
class Tape {
 public:
  /// Backward rule: receives the output adjoint and one slot per input. A slot
  /// is null when that input does not lie on a differentiated path.
  using BackwardFn = std::function<void(const Tensor& grad_out, std::span<Tensor* const> grad_in)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  /// Non-owning leaf. `external` must outlive the tape.
  Var view(const Tensor& external, bool requires_grad = false);

  /// Appends an op node. Used by the op library.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  /// Accumulates d(loss)/d(leaf) into every requires_grad leaf.
  void backward(Var loss);
  /// Returns d(loss)/d(wrt[i]) for arbitrary nodes without touching leaf
  /// accumulators.
  std::vector<Tensor> gradient(Var loss, std::span<const Var> wrt);
  void zero_grads();

  const Tensor& value(std::size_t id) const;
  const Tensor& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_.at(id).needs_grad; }
  bool is_leaf(std::size_t id) const { return nodes_.at(id).inputs.empty(); }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool leaf_requires_grad = false;
    bool needs_grad = false;
    mutable Tensor grad;
  };

  const Tensor& node_value(const Node& n) const { return n.external ? *n.external : n.owned; }
  std::vector<Tensor> sweep(std::size_t loss, std::size_t lowest, const std::vector<char>& active);
  void check_owner(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace advtex::diff
