#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dociiw/nn/unet.hpp"

namespace dociiw::nn {

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::uint64_t t = 0;

  static AdamState zeros_like(const ParamSet& params);
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update. `grads` holds one flat gradient per
/// parameter, in ParamSet order. Throws NonFiniteDetected (leaving params and
/// state untouched) if any gradient is not finite.
void adam_step(ParamSet& params, std::span<const std::vector<float>> grads, AdamState& state, const AdamConfig& cfg);

}  // namespace dociiw::nn
