#include "dociiw/pipeline/dataset.hpp"

#include <algorithm>
#include <limits>

#include "dociiw/error.hpp"
#include "dociiw/image_io.hpp"
#include "dociiw/parallel.hpp"

namespace dociiw::pipeline {

ad::Tensor to_tensor(const Raster& r) {
  const int w = r.width(), h = r.height(), c = r.channels();
  ad::Tensor t = ad::Tensor::zeros(ad::Shape::image(c, h, w));
  const auto src = r.data();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < c; ++k) t.at(k, y, x) = src[(static_cast<std::size_t>(y) * w + x) * c + k];
    }
  }
  return t;
}

ad::Tensor to_tensor(const Mask& mask) {
  ad::Tensor t = ad::Tensor::zeros(ad::Shape::image(1, mask.height(), mask.width()));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = mask[i] ? 1.0f : 0.0f;
  return t;
}

namespace {

std::vector<float> interleave(const ad::Tensor& t, int channels) {
  if (t.shape.rank() != 3 || t.shape.c() != channels) {
    throw Error(Errc::ShapeMismatch, "expected " + std::to_string(channels) + "-channel image tensor, got " +
                                         t.shape.str());
  }
  const int h = t.shape.h(), w = t.shape.w();
  std::vector<float> out(static_cast<std::size_t>(w) * h * channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < channels; ++k) out[(static_cast<std::size_t>(y) * w + x) * channels + k] = t.at(k, y, x);
    }
  }
  return out;
}

}  // namespace

LinearImage to_linear_image(const ad::Tensor& t) { return LinearImage(t.shape.w(), t.shape.h(), interleave(t, 3)); }

WBKernel to_kernel(const ad::Tensor& t) { return WBKernel(t.shape.w(), t.shape.h(), interleave(t, 3)); }

ShadingMap to_shading(const ad::Tensor& t) {
  const int c = t.shape.rank() == 3 ? t.shape.c() : 0;
  auto data = interleave(t, c == 3 ? 3 : 1);
  for (float& v : data) v = std::max(v, std::numeric_limits<float>::min());
  return ShadingMap(t.shape.w(), t.shape.h(), c == 3 ? 3 : 1, std::move(data));
}

Dataset load_dataset(const std::filesystem::path& manifest, bool load_withheld) {
  const auto entries = synth::read_manifest(manifest);
  if (entries.empty()) throw Error(Errc::IoError, "manifest has no records: " + manifest.string());
  Dataset ds;
  ds.root = manifest.parent_path();

  std::vector<Item> items(entries.size());
  std::vector<Withheld> withheld(entries.size());
  parallel_for(entries.size(), [&](std::size_t i) {
    const auto& e = entries[i];
    auto path = [&](const std::string& rel) { return ds.root / rel; };
    Item& it = items[i];
    it.id = e.id;
    it.input = to_tensor(io::read_pfm(path(e.input)));
    it.wb_gt = to_tensor(io::read_pfm(path(e.wb_gt)));
    it.kernel_gt = to_tensor(io::read_pfm_kernel(path(e.kernel_gt)));
    it.texture = to_tensor(io::read_pfm(path(e.texture)));
    it.mask = to_tensor(io::read_mask_png(path(e.mask)));
    it.lights = e.lights;
    if (it.wb_gt.shape != it.input.shape || it.kernel_gt.shape != it.input.shape ||
        it.texture.shape != it.input.shape || it.mask.shape.h() != it.input.shape.h() ||
        it.mask.shape.w() != it.input.shape.w()) {
      throw Error(Errc::ShapeMismatch, "sample " + e.id + " has inconsistent raster sizes");
    }
    if (load_withheld && e.split == "val") {
      if (e.material_gt.empty() || e.shading_gt.empty()) {
        throw Error(Errc::IoError, "sample " + e.id + " lacks material/shading ground truth");
      }
      withheld[i].material = to_tensor(io::read_pfm(path(e.material_gt)));
      withheld[i].shading = to_tensor(io::read_pfm_shading(path(e.shading_gt)));
    }
  });

  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].split == "val") {
      ds.val.push_back(std::move(items[i]));
      if (load_withheld) ds.val_withheld.push_back(std::move(withheld[i]));
    } else {
      ds.train.push_back(std::move(items[i]));
    }
  }
  return ds;
}

}  // namespace dociiw::pipeline
