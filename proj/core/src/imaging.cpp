#include "dociiw/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dociiw/error.hpp"

namespace dociiw {

namespace {

void require_same_extent(const Raster& a, const Raster& b, const char* op) {
  if (a.extent() != b.extent()) {
    throw Error(Errc::ShapeMismatch, std::string(op) + ": " + std::to_string(a.width()) + "x" +
                                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                                         "x" + std::to_string(b.height()));
  }
}

// Value of a 1- or 3-channel raster at the given pixel/channel of a 3-channel output.
inline float broadcast_at(const Raster& r, std::size_t pixel, int c) {
  return r.channels() == 1 ? r[pixel] : r[pixel * 3 + c];
}

}  // namespace

IlluminantSpec::IlluminantSpec(std::vector<Light> lights) : lights_(std::move(lights)) {
  if (lights_.empty()) throw Error(Errc::CountMismatch, "IlluminantSpec: at least one light required");
  for (const auto& l : lights_) {
    for (float c : l.color) {
      if (!(c > 0.0f && c <= 1.0f)) throw Error(Errc::OutOfRange, "IlluminantSpec: color channel outside (0, 1]");
    }
    if (!(l.intensity > 0.0f) || !std::isfinite(l.intensity)) {
      throw Error(Errc::OutOfRange, "IlluminantSpec: light intensity must be positive");
    }
  }
}

IlluminantSpec IlluminantSpec::achromatic() const {
  std::vector<Light> white = lights_;
  for (auto& l : white) l.color = {1.0f, 1.0f, 1.0f};
  return IlluminantSpec(std::move(white));
}

LinearImage hadamard(const Raster& a, const Raster& b) {
  require_same_extent(a, b, "hadamard");
  const std::size_t n = a.extent().pixels();
  std::vector<float> out(n * 3);
  for (std::size_t p = 0; p < n; ++p) {
    for (int c = 0; c < 3; ++c) out[p * 3 + c] = broadcast_at(a, p, c) * broadcast_at(b, p, c);
  }
  return LinearImage(a.width(), a.height(), std::move(out));
}

LinearImage divide_safe(const LinearImage& num, const Raster& den, float eps) {
  if (!(eps > 0.0f)) throw Error(Errc::InvalidArgument, "divide_safe: eps must be positive");
  require_same_extent(num, den, "divide_safe");
  const std::size_t n = num.extent().pixels();
  std::vector<float> out(n * 3);
  for (std::size_t p = 0; p < n; ++p) {
    for (int c = 0; c < 3; ++c) {
      out[p * 3 + c] = num[p * 3 + c] / std::max(broadcast_at(den, p, c), eps);
    }
  }
  return LinearImage(num.width(), num.height(), std::move(out));
}

ChromaticityMap chromaticity(const LinearImage& img, float eps) {
  if (!(eps > 0.0f)) throw Error(Errc::InvalidArgument, "chromaticity: eps must be positive");
  const std::size_t n = img.extent().pixels();
  ChromaticityMap out;
  out.extent = img.extent();
  out.data.resize(n * 3);
  std::vector<std::uint8_t> bits(n);
  for (std::size_t p = 0; p < n; ++p) {
    const float r = img[p * 3], g = img[p * 3 + 1], b = img[p * 3 + 2];
    const float sum = r + g + b;
    if (sum > eps) {
      out.data[p * 3] = r / sum;
      out.data[p * 3 + 1] = g / sum;
      out.data[p * 3 + 2] = b / sum;
      bits[p] = 1;
    } else {
      out.data[p * 3] = out.data[p * 3 + 1] = out.data[p * 3 + 2] = 1.0f / 3.0f;
    }
  }
  out.mask = Mask(img.extent(), std::move(bits));
  return out;
}

ScalarField intensity(const LinearImage& img) {
  const std::size_t n = img.extent().pixels();
  std::vector<float> out(n);
  for (std::size_t p = 0; p < n; ++p) out[p] = img[p * 3] + img[p * 3 + 1] + img[p * 3 + 2];
  return ScalarField(img.width(), img.height(), std::move(out));
}

LinearImage apply_wb(const WBKernel& kernel, const LinearImage& img) {
  require_same_extent(kernel, img, "apply_wb");
  std::vector<float> out(img.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = kernel[i] * img[i];
  return LinearImage(img.width(), img.height(), std::move(out));
}

ShadingMap render_shading(const IlluminantSpec& spec, std::span<const ShadingMap> lambdas) {
  if (lambdas.size() != spec.count()) {
    throw Error(Errc::CountMismatch, "render_shading: " + std::to_string(lambdas.size()) + " shading maps for " +
                                         std::to_string(spec.count()) + " lights");
  }
  const Extent e = lambdas.front().extent();
  for (const auto& l : lambdas) {
    if (l.channels() != 1) throw Error(Errc::ShapeMismatch, "render_shading: lambda maps must be 1-channel");
    require_same_extent(lambdas.front(), l, "render_shading");
  }
  const std::size_t n = e.pixels();
  std::vector<float> out(n * 3, 0.0f);
  for (std::size_t i = 0; i < spec.count(); ++i) {
    const Light& light = spec[i];
    const auto lam = lambdas[i].data();
    for (std::size_t p = 0; p < n; ++p) {
      const float s = lam[p] * light.intensity;
      for (int c = 0; c < 3; ++c) out[p * 3 + c] += s * light.color[c];
    }
  }
  return ShadingMap(e.width, e.height, 3, std::move(out));
}

ShadingMap mix_shadings(const ShadingMap& ms1, const ShadingMap& ms2, float a) {
  if (!(a >= 0.0f && a <= 1.0f)) throw Error(Errc::OutOfRange, "mix_shadings: a must lie in [0, 1]");
  require_same_extent(ms1, ms2, "mix_shadings");
  if (ms1.channels() != ms2.channels()) throw Error(Errc::ShapeMismatch, "mix_shadings: channel count differs");
  if (a == 1.0f) return ms1;
  if (a == 0.0f) return ms2;
  std::vector<float> out(ms1.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * ms1[i] + (1.0f - a) * ms2[i];
  return ShadingMap(ms1.width(), ms1.height(), ms1.channels(), std::move(out));
}

std::array<double, 2> planckian_xy(double cct) {
  if (!(cct >= kMinCct && cct <= kMaxCct)) {
    throw Error(Errc::OutOfRange, "planckian: CCT " + std::to_string(cct) + " K outside [1667, 25000]");
  }
  const double t = cct;
  const double t2 = t * t, t3 = t2 * t;
  double x;
  if (t <= 4000.0) {
    x = -0.2661239e9 / t3 - 0.2343589e6 / t2 + 0.8776956e3 / t + 0.179910;
  } else {
    x = -3.0258469e9 / t3 + 2.1070379e6 / t2 + 0.2226347e3 / t + 0.240390;
  }
  const double x2 = x * x, x3 = x2 * x;
  double y;
  if (t <= 2222.0) {
    y = -1.1063814 * x3 - 1.34811020 * x2 + 2.18555832 * x - 0.20219683;
  } else if (t <= 4000.0) {
    y = -0.9549476 * x3 - 1.37418593 * x2 + 2.09137015 * x - 0.16748867;
  } else {
    y = 3.0817580 * x3 - 5.87338670 * x2 + 3.75112997 * x - 0.37001483;
  }
  return {x, y};
}

Rgb planckian_rgb(double cct) {
  const auto [x, y] = planckian_xy(cct);
  const double X = x / y;
  const double Y = 1.0;
  const double Z = (1.0 - x - y) / y;
  // XYZ -> linear sRGB (D65 white).
  std::array<double, 3> rgb{
      3.2404542 * X - 1.5371385 * Y - 0.4985314 * Z,
      -0.9692660 * X + 1.8760108 * Y + 0.0415560 * Z,
      0.0556434 * X - 0.2040259 * Y + 1.0572252 * Z,
  };
  // Deep-red temperatures fall outside the sRGB gamut in blue.
  for (double& c : rgb) c = std::max(c, 1e-3);
  const double peak = std::max({rgb[0], rgb[1], rgb[2]});
  return {static_cast<float>(rgb[0] / peak), static_cast<float>(rgb[1] / peak), static_cast<float>(rgb[2] / peak)};
}

}  // namespace dociiw
