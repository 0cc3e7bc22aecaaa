#pragma once

#include <filesystem>

#include "dociiw/raster.hpp"

namespace dociiw::io {

float srgb_to_linear(float v) noexcept;
float linear_to_srgb(float v) noexcept;

/// Reads a 1- or 3-channel PFM. Row order and byte order follow the header.
Raster read_pfm_raster(const std::filesystem::path& path);
LinearImage read_pfm(const std::filesystem::path& path);
ShadingMap read_pfm_shading(const std::filesystem::path& path);
WBKernel read_pfm_kernel(const std::filesystem::path& path);

/// Writes little-endian PFM ("PF" for 3 channels, "Pf" for 1), bottom row first.
void write_pfm(const std::filesystem::path& path, const Raster& raster);

/// Reads an 8- or 16-bit PNG (gray, gray+alpha, RGB or RGBA; alpha is dropped).
/// With `srgb_decode` the stored values are linearized.
LinearImage read_png(const std::filesystem::path& path, bool srgb_decode = true);

/// Writes an 8-bit RGB (or gray, for 1-channel rasters) PNG, clamping to [0, 1].
void write_png(const std::filesystem::path& path, const Raster& raster, bool srgb_encode = true);

void write_mask_png(const std::filesystem::path& path, const Mask& mask);
Mask read_mask_png(const std::filesystem::path& path);

/// Dispatches on extension (.pfm or .png).
LinearImage read_image(const std::filesystem::path& path, bool srgb_decode = true);

}  // namespace dociiw::io
