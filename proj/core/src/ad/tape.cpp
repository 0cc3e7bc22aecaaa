#include "dociiw/ad/tape.hpp"

#include <cmath>
#include <numeric>

#include "dociiw/error.hpp"

namespace dociiw::ad {

std::size_t Shape::numel() const noexcept {
  return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                         [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

std::string Shape::str() const {
  std::string s = "(";
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims_[i]);
  }
  return s + ")";
}

Tensor::Tensor(Shape s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
  if (data.size() != shape.numel()) {
    throw Error(Errc::ShapeMismatch, "tensor data length " + std::to_string(data.size()) + " for shape " + shape.str());
  }
}

Tensor Tensor::filled(Shape s, float v) {
  const std::size_t n = s.numel();
  return Tensor(std::move(s), std::vector<float>(n, v));
}

float Tensor::item() const {
  if (data.size() != 1) throw Error(Errc::ShapeMismatch, "item() on tensor of shape " + shape.str());
  return data[0];
}

bool Tensor::all_finite() const noexcept {
  for (float v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

const Tensor& Var::value() const { return tape_->value(id_); }
const Shape& Var::shape() const { return tape_->value(id_).shape; }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

std::vector<float> Var::grad() const {
  if (!tape_->has_grad(id_)) return std::vector<float>(value().numel(), 0.0f);
  auto g = tape_->grad(id_);
  return {g.begin(), g.end()};
}

Var Tape::push_leaf(Tensor value, std::string label, bool requires_grad) {
  if (!label.empty() && forbidden_.contains(label)) {
    throw Error(Errc::FirewallViolation, "tensor '" + label + "' must not enter the gradient tape");
  }
  Node n;
  n.value = std::move(value);
  n.label = std::move(label);
  n.requires_grad = requires_grad;
  n.leaf = true;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value, std::string label) { return push_leaf(std::move(value), std::move(label), false); }

Var Tape::variable(Tensor value, std::string label) { return push_leaf(std::move(value), std::move(label), true); }

Var Tape::record(Tensor value, std::initializer_list<Var> parents, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (const Var& p : parents) {
    if (&p.tape() != this) throw Error(Errc::InvalidArgument, "op mixes variables from different tapes");
    n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

std::span<float> Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.numel(), 0.0f);
  return n.grad;
}

void Tape::backward(Var root) {
  if (&root.tape() != this) throw Error(Errc::InvalidArgument, "backward root belongs to another tape");
  const Tensor& v = value(root.id());
  if (v.numel() != 1) throw Error(Errc::ShapeMismatch, "backward root must be a scalar, got " + v.shape.str());
  if (!std::isfinite(v.data[0])) throw Error(Errc::NonFiniteDetected, "loss is not finite");
  if (!nodes_[root.id()].requires_grad) return;
  grad(root.id())[0] += 1.0f;
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.leaf || n.grad.empty() || !n.backward) continue;
    n.backward(*this, id);
  }
}

std::vector<std::string> Tape::leaf_labels() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_) {
    if (n.leaf && !n.label.empty()) out.push_back(n.label);
  }
  return out;
}

}  // namespace dociiw::ad
