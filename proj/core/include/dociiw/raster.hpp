#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dociiw {

struct Extent {
  int width = 0;
  int height = 0;

  std::size_t pixels() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  friend bool operator==(const Extent&, const Extent&) = default;
};

/// Row-major interleaved float raster. The typed wrappers below add the
/// value-domain invariants; this base only guarantees the size.
class Raster {
 public:
  Raster() = default;

  int width() const noexcept { return extent_.width; }
  int height() const noexcept { return extent_.height; }
  int channels() const noexcept { return channels_; }
  Extent extent() const noexcept { return extent_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const float> data() const noexcept { return data_; }

  float at(int x, int y, int c = 0) const noexcept {
    return data_[(static_cast<std::size_t>(y) * extent_.width + x) * channels_ + c];
  }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Moves the payload out, leaving an empty raster.
  std::vector<float> release() && { extent_ = {}; return std::move(data_); }

 protected:
  Raster(Extent extent, int channels, std::vector<float> data);

  Extent extent_{};
  int channels_ = 0;
  std::vector<float> data_;
};

/// H x W x 3 linear-RGB image. Values are finite and non-negative.
class LinearImage : public Raster {
 public:
  LinearImage() = default;
  LinearImage(int width, int height, std::vector<float> data);

  static LinearImage filled(int width, int height, float r, float g, float b);
  static LinearImage filled(int width, int height, float v) { return filled(width, height, v, v, v); }
};

/// Strictly positive shading, either achromatic (1 channel) or colored (3).
class ShadingMap : public Raster {
 public:
  ShadingMap() = default;
  ShadingMap(int width, int height, int channels, std::vector<float> data);

  static ShadingMap filled(int width, int height, int channels, float v);
};

/// Per-pixel white-balance correction factors (>= 0), 3 channels.
class WBKernel : public Raster {
 public:
  WBKernel() = default;
  WBKernel(int width, int height, std::vector<float> data);

  static WBKernel filled(int width, int height, float r, float g, float b);
};

/// Unconstrained single-channel field (per-pixel intensity, masks as floats).
class ScalarField : public Raster {
 public:
  ScalarField() = default;
  ScalarField(int width, int height, std::vector<float> data);
};

class Mask {
 public:
  Mask() = default;
  Mask(Extent extent, bool fill) : extent_(extent), bits_(extent.pixels(), fill ? 1 : 0) {}
  Mask(Extent extent, std::vector<std::uint8_t> bits);

  Extent extent() const noexcept { return extent_; }
  int width() const noexcept { return extent_.width; }
  int height() const noexcept { return extent_.height; }
  bool operator[](std::size_t pixel) const noexcept { return bits_[pixel] != 0; }
  bool at(int x, int y) const noexcept { return bits_[static_cast<std::size_t>(y) * extent_.width + x] != 0; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::size_t count() const noexcept;

 private:
  Extent extent_{};
  std::vector<std::uint8_t> bits_;
};

/// Intensity-normalized color. Where the mask is false the pixel carries the
/// neutral (1/3, 1/3, 1/3) placeholder.
struct ChromaticityMap {
  Extent extent;
  std::vector<float> data;
  Mask mask;

  float at(int x, int y, int c) const noexcept {
    return data[(static_cast<std::size_t>(y) * extent.width + x) * 3 + c];
  }
};

}  // namespace dociiw
