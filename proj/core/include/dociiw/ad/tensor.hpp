#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dociiw::ad {

/// Dimension list. Image tensors are rank 3 (channels, height, width); conv
/// weights are rank 4 (out, in, kh, kw); biases rank 1; scalars rank 0.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<int> dims) : dims_(dims) {}
  explicit Shape(std::vector<int> dims) : dims_(std::move(dims)) {}

  static Shape image(int c, int h, int w) { return Shape{c, h, w}; }
  static Shape scalar() { return Shape{}; }

  std::size_t rank() const noexcept { return dims_.size(); }
  int operator[](std::size_t i) const noexcept { return dims_[i]; }
  std::span<const int> dims() const noexcept { return dims_; }
  std::size_t numel() const noexcept;

  // rank-3 accessors
  int c() const noexcept { return dims_[0]; }
  int h() const noexcept { return dims_[1]; }
  int w() const noexcept { return dims_[2]; }

  std::string str() const;
  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<int> dims_;
};

struct Tensor {
  Shape shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(Shape s, std::vector<float> d);
  static Tensor zeros(Shape s) { return filled(std::move(s), 0.0f); }
  static Tensor filled(Shape s, float v);
  static Tensor scalar(float v) { return Tensor(Shape::scalar(), {v}); }

  std::size_t numel() const noexcept { return data.size(); }
  float& operator[](std::size_t i) noexcept { return data[i]; }
  float operator[](std::size_t i) const noexcept { return data[i]; }
  float item() const;

  /// Element (c, y, x) of a rank-3 tensor.
  float& at(int c, int y, int x) noexcept { return data[(static_cast<std::size_t>(c) * shape.h() + y) * shape.w() + x]; }
  float at(int c, int y, int x) const noexcept {
    return data[(static_cast<std::size_t>(c) * shape.h() + y) * shape.w() + x];
  }

  bool all_finite() const noexcept;
};

}  // namespace dociiw::ad
