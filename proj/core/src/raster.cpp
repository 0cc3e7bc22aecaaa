#include "dociiw/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dociiw/error.hpp"

namespace dociiw {

namespace {

void check_extent(Extent e, int channels, std::size_t len, const char* what) {
  if (e.width < 0 || e.height < 0) {
    throw Error(Errc::InvalidArgument, std::string(what) + ": negative dimensions");
  }
  if (len != e.pixels() * static_cast<std::size_t>(channels)) {
    throw Error(Errc::ShapeMismatch,
                std::string(what) + ": data length " + std::to_string(len) + " != " +
                    std::to_string(e.width) + "x" + std::to_string(e.height) + "x" +
                    std::to_string(channels));
  }
}

}  // namespace

Raster::Raster(Extent extent, int channels, std::vector<float> data)
    : extent_(extent), channels_(channels), data_(std::move(data)) {
  check_extent(extent_, channels_, data_.size(), "raster");
}

LinearImage::LinearImage(int width, int height, std::vector<float> data)
    : Raster({width, height}, 3, std::move(data)) {
  for (float v : data_) {
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteDetected, "LinearImage: non-finite value");
    if (v < 0.0f) throw Error(Errc::OutOfRange, "LinearImage: negative value");
  }
}

LinearImage LinearImage::filled(int width, int height, float r, float g, float b) {
  std::vector<float> d(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < d.size(); i += 3) {
    d[i] = r;
    d[i + 1] = g;
    d[i + 2] = b;
  }
  return LinearImage(width, height, std::move(d));
}

ShadingMap::ShadingMap(int width, int height, int channels, std::vector<float> data)
    : Raster({width, height}, channels, std::move(data)) {
  if (channels != 1 && channels != 3) {
    throw Error(Errc::InvalidArgument, "ShadingMap: channels must be 1 or 3");
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteDetected, "ShadingMap: non-finite value");
    if (!(v > 0.0f)) throw Error(Errc::OutOfRange, "ShadingMap: values must be strictly positive");
  }
}

ShadingMap ShadingMap::filled(int width, int height, int channels, float v) {
  return ShadingMap(width, height, channels,
                    std::vector<float>(static_cast<std::size_t>(width) * height * channels, v));
}

WBKernel::WBKernel(int width, int height, std::vector<float> data)
    : Raster({width, height}, 3, std::move(data)) {
  for (float v : data_) {
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteDetected, "WBKernel: non-finite value");
    if (v < 0.0f) throw Error(Errc::OutOfRange, "WBKernel: negative factor");
  }
}

WBKernel WBKernel::filled(int width, int height, float r, float g, float b) {
  std::vector<float> d(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < d.size(); i += 3) {
    d[i] = r;
    d[i + 1] = g;
    d[i + 2] = b;
  }
  return WBKernel(width, height, std::move(d));
}

ScalarField::ScalarField(int width, int height, std::vector<float> data)
    : Raster({width, height}, 1, std::move(data)) {}

Mask::Mask(Extent extent, std::vector<std::uint8_t> bits) : extent_(extent), bits_(std::move(bits)) {
  check_extent(extent_, 1, bits_.size(), "mask");
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count_if(bits_.begin(), bits_.end(), [](auto b) { return b != 0; }));
}

}  // namespace dociiw
