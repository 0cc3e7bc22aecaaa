#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dociiw/ad/tensor.hpp"
#include "dociiw/manifest.hpp"
#include "dociiw/raster.hpp"

namespace dociiw::pipeline {

// Rasters are interleaved (H, W, C); tensors are planar (C, H, W).
ad::Tensor to_tensor(const Raster& raster);
ad::Tensor to_tensor(const Mask& mask);
LinearImage to_linear_image(const ad::Tensor& t);
WBKernel to_kernel(const ad::Tensor& t);
/// Values are floored at the smallest normal float to keep the map positive.
ShadingMap to_shading(const ad::Tensor& t);

/// Training-visible part of a sample. Nothing here is withheld ground truth.
struct Item {
  std::string id;
  ad::Tensor input;      // I
  ad::Tensor wb_gt;      // I_wb
  ad::Tensor kernel_gt;  // WB
  ad::Tensor texture;    // T
  ad::Tensor mask;       // (1, H, W)
  std::vector<synth::SampleLight> lights;
};

/// Withheld ground truth, loaded only for validation diagnostics.
struct Withheld {
  ad::Tensor material;  // M
  ad::Tensor shading;   // lambda, (1, H, W)
};

struct Dataset {
  std::filesystem::path root;
  std::vector<Item> train;
  std::vector<Item> val;
  std::vector<Withheld> val_withheld;  // parallel to val, empty unless requested
};

/// Reads every manifest record; paths resolve against the manifest's
/// directory. Throws IoError on missing files.
Dataset load_dataset(const std::filesystem::path& manifest, bool load_withheld);

}  // namespace dociiw::pipeline
