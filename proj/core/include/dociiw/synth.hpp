#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dociiw/imaging.hpp"
#include "dociiw/rng.hpp"

namespace dociiw::synth {

struct SynthesisParams {
  int width = 64;
  int height = 64;

  int shading_octaves = 3;
  bool shading_gradient = true;
  float shading_lo = 0.35f;
  float shading_hi = 1.0f;

  Rgb tint_lo{0.9f, 0.9f, 0.9f};
  Rgb tint_hi{1.0f, 1.0f, 1.0f};
  /// Relative amplitude of the low-frequency material variation; 0 gives a
  /// constant tint.
  float tint_variation = 0.02f;

  double cct_lo = 2500.0;
  double cct_hi = 10000.0;
  double two_light_probability = 0.5;

  /// Fraction of text lines that carry glyphs; 0 yields a blank page.
  double text_density = 0.8;
  int glyph_scale = 1;

  /// Composite input values above this are clipped and masked out.
  float clip_max = 2.0f;

  int train_samples = 256;
  int val_samples = 64;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SampleLight {
  double cct = 0.0;
  Rgb rgb{};
  float eta = 1.0f;
};

/// One training record. material_gt and shading_gt are diagnostics only.
struct Sample {
  LinearImage input;      // I
  LinearImage wb_gt;      // I_wb
  WBKernel kernel_gt;     // I_wb / I on the mask, 0 elsewhere
  LinearImage texture;    // T
  LinearImage material_gt;
  ShadingMap shading_gt;  // achromatic combined shading, 1 channel
  Mask mask;
  std::vector<SampleLight> lights;
  std::optional<float> mix_a;
  double clip_rate = 0.0;
};

/// Band-limited positive field: value-noise octaves plus a random linear
/// ramp, mapped into [shading_lo, shading_hi].
ShadingMap gen_shading_field(const SynthesisParams& params, Rng& rng);

/// Near-white tint with slight low-frequency variation, inside the tint box.
LinearImage gen_material(const SynthesisParams& params, Rng& rng);

struct TextTexture {
  LinearImage image;
  std::string text;  // glyph rows joined by '\n'
};

/// Document-like texture: dark bitmap glyphs on a light page.
TextTexture gen_text_texture(Rng& rng, const SynthesisParams& params);

/// Draws one or two Planckian lights and composes I and its ground truth.
Sample synth_sample(const LinearImage& texture, const SynthesisParams& params, Rng& rng);

/// Bilinear resample of a texture to the requested size.
LinearImage resize(const LinearImage& img, int width, int height);

struct DatasetSummary {
  std::filesystem::path manifest;
  std::size_t samples = 0;
  std::size_t train = 0;
  std::size_t val = 0;
};

/// Writes train_samples + val_samples records under `out` plus
/// out/manifest.jsonl. Sample i draws from Rng::derive(seed, i) and uses
/// texture i % N. Throws EmptyTextureSet when `textures` is empty.
DatasetSummary build_dataset(std::span<const LinearImage> textures, const SynthesisParams& params,
                             const std::filesystem::path& out);

/// Same, with a fresh procedural text texture per sample.
DatasetSummary build_procedural_dataset(const SynthesisParams& params, const std::filesystem::path& out);

/// Loads every .png / .pfm in `dir` (sorted by name) and builds the dataset.
DatasetSummary build_dataset(const std::filesystem::path& texture_dir, const SynthesisParams& params,
                             const std::filesystem::path& out);

}  // namespace dociiw::synth
