#include "dociiw/nn/adam.hpp"

#include <cmath>

#include "dociiw/error.hpp"

namespace dociiw::nn {

AdamState AdamState::zeros_like(const ParamSet& params) {
  AdamState s;
  for (const auto& p : params.items()) {
    s.m.emplace_back(p.value.numel(), 0.0f);
    s.v.emplace_back(p.value.numel(), 0.0f);
  }
  return s;
}

void adam_step(ParamSet& params, std::span<const std::vector<float>> grads, AdamState& state, const AdamConfig& cfg) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error(Errc::ShapeMismatch, "adam_step: parameter, gradient and state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].value.numel() || state.m[i].size() != grads[i].size()) {
      throw Error(Errc::ShapeMismatch, "adam_step: gradient shape mismatch for " + params[i].name);
    }
    for (float g : grads[i]) {
      if (!std::isfinite(g)) throw Error(Errc::NonFiniteDetected, "adam_step: non-finite gradient in " + params[i].name);
    }
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const float c1 = static_cast<float>(1.0 - std::pow(static_cast<double>(cfg.beta1), t));
  const float c2 = static_cast<float>(1.0 - std::pow(static_cast<double>(cfg.beta2), t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i].value.data;
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0f - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0f - cfg.beta2) * g[j] * g[j];
      const float mhat = m[j] / c1;
      const float vhat = v[j] / c2;
      w[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace dociiw::nn
