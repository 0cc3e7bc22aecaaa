#pragma once

#include <functional>
#include <initializer_list>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dociiw/ad/tensor.hpp"

namespace dociiw::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape& tape() const noexcept { return *tape_; }
  int id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const;
  bool requires_grad() const;
  /// Accumulated gradient; all zeros if nothing flowed into this node.
  std::vector<float> grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode tape. Nodes are appended in evaluation order by the ops in
/// ops.hpp; backward() replays them in reverse. A tape is single-threaded and
/// single-use: build, backward once, read gradients, discard.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Data leaf; never accumulates gradient.
  Var constant(Tensor value, std::string label = {});
  /// Differentiable leaf.
  Var variable(Tensor value, std::string label = {});

  /// Records an op result. `backward` is dropped when no parent requires grad.
  Var record(Tensor value, std::initializer_list<Var> parents, Backward backward);

  const Tensor& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  const std::string& label(int id) const { return nodes_[id].label; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Gradient buffer of node `id`, allocated (zeroed) on first use.
  std::span<float> grad(int id);
  bool has_grad(int id) const { return !nodes_[id].grad.empty(); }

  /// Seeds d(root)/d(root) = 1 and propagates. Root must hold one element.
  /// Throws NonFiniteDetected if the root value is not finite.
  void backward(Var root);

  /// Self-supervision firewall: adding a leaf whose label is forbidden throws
  /// FirewallViolation.
  void forbid(std::string label) { forbidden_.insert(std::move(label)); }
  std::vector<std::string> leaf_labels() const;

 private:
  struct Node {
    Tensor value;
    std::vector<float> grad;
    Backward backward;
    std::string label;
    bool requires_grad = false;
    bool leaf = false;
  };

  Var push_leaf(Tensor value, std::string label, bool requires_grad);

  std::vector<Node> nodes_;
  std::set<std::string> forbidden_;
};

}  // namespace dociiw::ad
