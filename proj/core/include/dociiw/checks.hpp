#pragma once

// Built-in verification suites behind the gradcheck and selftest commands.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dociiw/ad/tape.hpp"

namespace dociiw::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured error
  double tolerance = 0.0;  // pass threshold
  std::string detail;
};

bool all_passed(std::span<const CheckResult> results) noexcept;
std::string format(const CheckResult& r);

/// Builds a scalar from differentiable leaves, one per input tensor.
using Objective = std::function<ad::Var(std::span<const ad::Var> inputs)>;

/// ||g_analytic - g_numeric|| / max(||g_analytic||, ||g_numeric||) over all
/// input elements, with central differences of step `step`. Both norms below
/// 1e-7 count as agreement.
double gradient_error(const Objective& f, const std::vector<ad::Tensor>& inputs, float step = 1e-3f);

/// Worst |<g, d> - fd| / max(|<g, d>|, |fd|, ||g||) with fd the central difference
/// over `directions` random standard-normal directions.
double directional_error(const Objective& f, const std::vector<ad::Tensor>& inputs, int directions,
                         std::uint64_t seed, float step = 1e-3f);

/// Every differentiable primitive, every loss, and both full objectives
/// through the networks at 16x16.
std::vector<CheckResult> gradient_suite(std::uint64_t seed);

/// Chromaticity, compose/divide and white-balance identities on `pixels`
/// random pixels and synthesized samples.
std::vector<CheckResult> physics_suite(std::uint64_t seed, int pixels = 1000);

/// physics_suite plus file and checkpoint round trips, synthesis identities
/// and the ground-truth reconstruction path. Writes only under `scratch`.
std::vector<CheckResult> selftest(std::uint64_t seed, const std::filesystem::path& scratch);

}  // namespace dociiw::checks
