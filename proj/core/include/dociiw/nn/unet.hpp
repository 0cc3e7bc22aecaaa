#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dociiw/ad/tape.hpp"

namespace dociiw::nn {

enum class Activation : std::uint32_t { Identity = 0, Softplus = 1, Sigmoid = 2 };

struct HeadConfig {
  std::string name;
  int channels = 3;
  Activation activation = Activation::Softplus;

  friend bool operator==(const HeadConfig&, const HeadConfig&) = default;
};

/// Encoder-decoder layout. One decoder branch per head; every branch reads
/// the same encoder pyramid through its own skip connections.
struct NetConfig {
  int in_channels = 3;
  int depth = 3;
  int width = 8;
  int kernel = 3;
  std::vector<HeadConfig> heads;

  /// Spatial sizes must be multiples of this.
  int divisor() const noexcept { return 1 << depth; }
  int channels_at(int level) const noexcept;
  void validate() const;

  /// Single softplus head producing a 3-channel white-balance kernel.
  static NetConfig wbnet(int depth = 3, int width = 8);
  /// Sigmoid material head and softplus 1-channel shading head.
  static NetConfig smtnet(int depth = 3, int width = 8);

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

struct Parameter {
  std::string name;
  ad::Tensor value;
};

/// Ordered named parameter tensors.
class ParamSet {
 public:
  void add(std::string name, ad::Tensor value);

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t numel() const noexcept;
  Parameter& operator[](std::size_t i) noexcept { return params_[i]; }
  const Parameter& operator[](std::size_t i) const noexcept { return params_[i]; }
  std::span<Parameter> items() noexcept { return params_; }
  std::span<const Parameter> items() const noexcept { return params_; }
  /// Index of the named parameter; throws InvalidArgument if absent.
  std::size_t index_of(const std::string& name) const;

  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  std::vector<Parameter> params_;
};

class UNet {
 public:
  explicit UNet(NetConfig config);

  const NetConfig& config() const noexcept { return config_; }

  /// Fan-in-scaled uniform weights, zero biases, fixed by `seed`.
  ParamSet init(std::uint64_t seed) const;

  /// Adds every parameter to the tape as a differentiable leaf.
  std::vector<ad::Var> bind(ad::Tape& tape, const ParamSet& params) const;
  /// Adds every parameter as a constant (inference).
  std::vector<ad::Var> bind_frozen(ad::Tape& tape, const ParamSet& params) const;

  /// Input (in_channels, H, W) with H, W divisible by divisor(). Returns one
  /// activated output per head.
  std::vector<ad::Var> forward(std::span<const ad::Var> params, ad::Var input) const;

 private:
  struct ConvSlot {
    std::string name;
    int in = 0;
    int out = 0;
  };

  NetConfig config_;
  std::vector<ConvSlot> convs_;  // parameter layout: w, b per slot
};

}  // namespace dociiw::nn
