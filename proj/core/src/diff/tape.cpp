#include "advtex/diff/tape.hpp"

#include <algorithm>
#include <limits>

namespace advtex::diff {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  if (!value.all_finite()) throw NumericError("non-finite value in leaf tensor");
  Node n;
  n.owned = std::move(value);
  n.leaf_requires_grad = requires_grad;
  n.needs_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::view(const Tensor& external, bool requires_grad) {
  if (!external.all_finite()) throw NumericError("non-finite value in leaf tensor");
  Node n;
  n.external = &external;
  n.leaf_requires_grad = requires_grad;
  n.needs_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError("op produced a non-finite value");
  Node n;
  n.owned = std::move(value);
  n.needs_grad = std::any_of(inputs.begin(), inputs.end(),
                             [this](std::size_t i) { return nodes_.at(i).needs_grad; });
  n.inputs = std::move(inputs);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const { return node_value(nodes_.at(id)); }

const Tensor& Tape::grad(std::size_t id) const {
  const Node& n = nodes_.at(id);
  // Materialized lazily so callers always see a same-shape tensor.
  if (n.grad.empty()) n.grad = Tensor(node_value(n).shape(), 0.0);
  return n.grad;
}

void Tape::check_owner(Var v) const {
  if (&v.tape() != this) throw std::invalid_argument("variable belongs to a different tape");
}

std::vector<Tensor> Tape::sweep(std::size_t loss, std::size_t lowest, const std::vector<char>& active) {
  std::vector<Tensor> adj(loss + 1);
  adj[loss] = Tensor(value(loss).shape(), 1.0);
  std::vector<Tensor*> slots;
  for (std::size_t i = loss + 1; i-- > lowest;) {
    if (adj[i].empty()) continue;
    const Node& n = nodes_[i];
    if (n.inputs.empty() || !n.backward) continue;
    slots.assign(n.inputs.size(), nullptr);
    bool any = false;
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      const std::size_t in = n.inputs[k];
      if (in < lowest || !active[in]) continue;
      if (adj[in].empty()) adj[in] = Tensor(value(in).shape(), 0.0);
      slots[k] = &adj[in];
      any = true;
    }
    if (any) n.backward(adj[i], slots);
  }
  return adj;
}

void Tape::backward(Var loss) {
  check_owner(loss);
  if (value(loss.id()).size() != 1) {
    throw ShapeError("backward requires a scalar loss, got shape " + shape_str(value(loss.id()).shape()));
  }
  std::vector<char> active(loss.id() + 1);
  for (std::size_t i = 0; i <= loss.id(); ++i) active[i] = nodes_[i].needs_grad;
  if (!active[loss.id()]) return;
  auto adj = sweep(loss.id(), 0, active);
  for (std::size_t i = 0; i <= loss.id(); ++i) {
    Node& n = nodes_[i];
    if (!n.leaf_requires_grad || adj[i].empty()) continue;
    if (n.grad.empty()) {
      n.grad = std::move(adj[i]);
    } else {
      double* g = n.grad.data();
      const double* a = adj[i].data();
      for (std::size_t j = 0; j < n.grad.size(); ++j) g[j] += a[j];
    }
  }
}

std::vector<Tensor> Tape::gradient(Var loss, std::span<const Var> wrt) {
  check_owner(loss);
  if (value(loss.id()).size() != 1) {
    throw ShapeError("gradient requires a scalar loss, got shape " + shape_str(value(loss.id()).shape()));
  }
  std::vector<Tensor> out;
  out.reserve(wrt.size());
  std::size_t lowest = std::numeric_limits<std::size_t>::max();
  std::vector<char> active(loss.id() + 1, 0);
  for (const Var& w : wrt) {
    check_owner(w);
    if (w.id() <= loss.id()) {
      active[w.id()] = 1;
      lowest = std::min(lowest, w.id());
    }
  }
  if (lowest != std::numeric_limits<std::size_t>::max()) {
    for (std::size_t i = lowest; i <= loss.id(); ++i) {
      if (active[i]) continue;
      for (std::size_t in : nodes_[i].inputs) {
        if (in >= lowest && active[in]) {
          active[i] = 1;
          break;
        }
      }
    }
  }
  std::vector<Tensor> adj;
  if (lowest != std::numeric_limits<std::size_t>::max() && active[loss.id()]) {
    adj = sweep(loss.id(), lowest, active);
  }
  for (const Var& w : wrt) {
    if (w.id() < adj.size() && !adj[w.id()].empty()) {
      out.push_back(adj[w.id()]);
    } else {
      out.emplace_back(value(w.id()).shape(), 0.0);
    }
  }
  return out;
}

void Tape::zero_grads() {
  for (Node& n : nodes_) {
    if (!n.grad.empty()) n.grad.fill(0.0);
  }
}

}  // namespace advtex::diff
