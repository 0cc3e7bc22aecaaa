#pragma once

// Image-formation algebra for the Lambertian document model
//
//   I^c(p) = M^c(p) T^c(p) sum_i lambda_i(p) eta_i l_i^c
//
// and its white-balanced counterpart, in which every light is achromatic.
// All functions are pure and total over valid inputs.

#include <array>
#include <span>
#include <vector>

#include "dociiw/raster.hpp"

namespace dociiw {

using Rgb = std::array<float, 3>;

inline constexpr float kDivideEps = 1e-6f;
inline constexpr float kChromaEps = 1e-4f;

inline constexpr double kMinCct = 1667.0;
inline constexpr double kMaxCct = 25000.0;

struct Light {
  Rgb color{1.0f, 1.0f, 1.0f};  // max channel 1
  float intensity = 1.0f;        // eta
};

/// A validated, non-empty set of lights.
class IlluminantSpec {
 public:
  explicit IlluminantSpec(std::vector<Light> lights);

  std::size_t count() const noexcept { return lights_.size(); }
  std::span<const Light> lights() const noexcept { return lights_; }
  const Light& operator[](std::size_t i) const noexcept { return lights_[i]; }

  /// The same lights with their colors replaced by white.
  IlluminantSpec achromatic() const;

 private:
  std::vector<Light> lights_;
};

/// Element-wise product. A 1-channel operand broadcasts over 3 channels.
LinearImage hadamard(const Raster& a, const Raster& b);

/// num / max(den, eps), element-wise; a 1-channel den broadcasts.
LinearImage divide_safe(const LinearImage& num, const Raster& den, float eps = kDivideEps);

ChromaticityMap chromaticity(const LinearImage& img, float eps = kChromaEps);

/// Per-pixel channel sum.
ScalarField intensity(const LinearImage& img);

/// I_wb^c(p) = WB^c(p) I^c(p).
LinearImage apply_wb(const WBKernel& kernel, const LinearImage& img);

/// Colored shading sum_i lambda_i(p) eta_i l_i^c.
ShadingMap render_shading(const IlluminantSpec& spec, std::span<const ShadingMap> lambdas);

/// a * ms1 + (1 - a) * ms2.
ShadingMap mix_shadings(const ShadingMap& ms1, const ShadingMap& ms2, float a);

/// CIE 1931 xy of the Planckian locus (Kim et al. cubic spline).
std::array<double, 2> planckian_xy(double cct);

/// Linear-sRGB color of a blackbody at `cct` kelvin, max channel = 1.
Rgb planckian_rgb(double cct);

}  // namespace dociiw
