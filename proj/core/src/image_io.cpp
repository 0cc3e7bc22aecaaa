#include "dociiw/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "dociiw/error.hpp"

namespace dociiw::io {

namespace {

// Exposes the protected raster constructor for decoding into a shape-only raster.
class DecodedRaster : public Raster {
 public:
  DecodedRaster(Extent e, int c, std::vector<float> d) : Raster(e, c, std::move(d)) {}
};

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
  return f;
}

}  // namespace

float srgb_to_linear(float v) noexcept {
  return v <= 0.04045f ? v / 12.92f : std::pow((v + 0.055f) / 1.055f, 2.4f);
}

float linear_to_srgb(float v) noexcept {
  v = std::clamp(v, 0.0f, 1.0f);
  return v <= 0.0031308f ? v * 12.92f : 1.055f * std::pow(v, 1.0f / 2.4f) - 0.055f;
}

Raster read_pfm_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  in.get();  // single whitespace before the payload
  if (!in || (magic != "PF" && magic != "Pf") || w <= 0 || h <= 0 || scale == 0.0) {
    throw Error(Errc::IoError, "malformed PFM header in " + path.string());
  }
  const int channels = magic == "PF" ? 3 : 1;
  const std::size_t row = static_cast<std::size_t>(w) * channels;
  std::vector<float> data(row * h);
  const bool file_little = scale < 0.0;
  const bool host_little = std::endian::native == std::endian::little;
  std::vector<float> line(row);
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(line.data()), static_cast<std::streamsize>(row * sizeof(float)));
    if (!in) throw Error(Errc::IoError, "truncated PFM payload in " + path.string());
    if (file_little != host_little) {
      for (float& v : line) v = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(v)));
    }
    std::copy(line.begin(), line.end(), data.begin() + static_cast<std::ptrdiff_t>(row * y));
  }
  return DecodedRaster({w, h}, channels, std::move(data));
}

LinearImage read_pfm(const std::filesystem::path& path) {
  Raster r = read_pfm_raster(path);
  if (r.channels() != 3) throw Error(Errc::ShapeMismatch, path.string() + ": expected a 3-channel PFM");
  const int w = r.width(), h = r.height();
  return LinearImage(w, h, std::move(r).release());
}

ShadingMap read_pfm_shading(const std::filesystem::path& path) {
  Raster r = read_pfm_raster(path);
  const int w = r.width(), h = r.height(), c = r.channels();
  return ShadingMap(w, h, c, std::move(r).release());
}

WBKernel read_pfm_kernel(const std::filesystem::path& path) {
  Raster r = read_pfm_raster(path);
  if (r.channels() != 3) throw Error(Errc::ShapeMismatch, path.string() + ": expected a 3-channel PFM");
  const int w = r.width(), h = r.height();
  return WBKernel(w, h, std::move(r).release());
}

void write_pfm(const std::filesystem::path& path, const Raster& raster) {
  if (raster.channels() != 1 && raster.channels() != 3) {
    throw Error(Errc::InvalidArgument, "PFM supports 1 or 3 channels");
  }
  auto f = open_file(path, "wb");
  std::string header = (raster.channels() == 3 ? "PF\n" : "Pf\n") + std::to_string(raster.width()) + " " +
                       std::to_string(raster.height()) + "\n-1.0\n";
  bool ok = std::fwrite(header.data(), 1, header.size(), f.get()) == header.size();
  const std::size_t row = static_cast<std::size_t>(raster.width()) * raster.channels();
  std::vector<std::uint32_t> line(row);
  const auto data = raster.data();
  for (int y = raster.height() - 1; y >= 0 && ok; --y) {
    for (std::size_t i = 0; i < row; ++i) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(data[row * y + i]);
      if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
      line[i] = bits;
    }
    ok = std::fwrite(line.data(), sizeof(std::uint32_t), row, f.get()) == row;
  }
  if (!ok) throw Error(Errc::IoError, "short write to " + path.string());
}

namespace {

struct PngRead {
  Extent extent;
  int channels = 0;
  std::vector<float> values;  // normalized to [0, 1], native channel count
};

PngRead decode_png(const std::filesystem::path& path) {
  auto f = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(Errc::IoError, path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::IoError, "libpng init failed");
  }
  PngRead out;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::IoError, "failed to decode " + path.string());
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int ch = png_get_channels(png, info);
  const int bits = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * h);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  out.extent = {w, h};
  out.channels = ch;
  out.values.resize(static_cast<std::size_t>(w) * h * ch);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (bits == 16) {
      std::uint16_t v;
      std::memcpy(&v, buffer.data() + i * 2, 2);
      out.values[i] = v / 65535.0f;
    } else {
      out.values[i] = buffer[i] / 255.0f;
    }
  }
  return out;
}

void encode_png(const std::filesystem::path& path, int w, int h, int channels, const std::vector<png_byte>& bytes) {
  auto f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::IoError, "libpng init failed");
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) {
    rows[y] = const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * w * channels);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::IoError, "failed to encode " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, w, h, 8, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

LinearImage read_png(const std::filesystem::path& path, bool srgb_decode) {
  PngRead raw = decode_png(path);
  const std::size_t n = raw.extent.pixels();
  std::vector<float> rgb(n * 3);
  for (std::size_t p = 0; p < n; ++p) {
    for (int c = 0; c < 3; ++c) {
      // gray (+alpha) replicates channel 0; RGB(A) takes channel c
      const int src = raw.channels >= 3 ? c : 0;
      float v = raw.values[p * raw.channels + src];
      rgb[p * 3 + c] = srgb_decode ? srgb_to_linear(v) : v;
    }
  }
  return LinearImage(raw.extent.width, raw.extent.height, std::move(rgb));
}

void write_png(const std::filesystem::path& path, const Raster& raster, bool srgb_encode) {
  const int ch = raster.channels();
  if (ch != 1 && ch != 3) throw Error(Errc::InvalidArgument, "PNG writer supports 1 or 3 channels");
  std::vector<png_byte> bytes(raster.size());
  const auto data = raster.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    float v = std::clamp(data[i], 0.0f, 1.0f);
    if (srgb_encode) v = linear_to_srgb(v);
    bytes[i] = static_cast<png_byte>(std::lround(v * 255.0f));
  }
  encode_png(path, raster.width(), raster.height(), ch, bytes);
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  std::vector<png_byte> bytes(mask.extent().pixels());
  const auto bits = mask.bits();
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = bits[i] ? 255 : 0;
  encode_png(path, mask.width(), mask.height(), 1, bytes);
}

Mask read_mask_png(const std::filesystem::path& path) {
  PngRead raw = decode_png(path);
  const std::size_t n = raw.extent.pixels();
  std::vector<std::uint8_t> bits(n);
  for (std::size_t p = 0; p < n; ++p) bits[p] = raw.values[p * raw.channels] > 0.5f ? 1 : 0;
  return Mask(raw.extent, std::move(bits));
}

LinearImage read_image(const std::filesystem::path& path, bool srgb_decode) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pfm") return read_pfm(path);
  if (ext == ".png") return read_png(path, srgb_decode);
  throw Error(Errc::IoError, "unsupported image format: " + path.string());
}

}  // namespace dociiw::io
