#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "dociiw/ad/tensor.hpp"
#include "dociiw/nn/checkpoint.hpp"
#include "dociiw/nn/unet.hpp"
#include "dociiw/raster.hpp"

namespace dociiw::pipeline {

/// A frozen network. Evaluation is const and thread-safe.
class Model {
 public:
  Model(nn::NetConfig config, nn::ParamSet params);
  static Model from_checkpoint(const nn::Checkpoint& ckpt);
  /// Throws CheckpointMismatch when the stored layout differs from `expected`.
  static Model load(const std::filesystem::path& path, const nn::NetConfig& expected);

  const nn::UNet& net() const noexcept { return net_; }
  const nn::ParamSet& params() const noexcept { return params_; }

  /// Runs every head on a (C, H, W) input of any size: the input is
  /// reflect-padded to a multiple of the network divisor and the outputs are
  /// cropped back.
  std::vector<ad::Tensor> run(const ad::Tensor& input) const;

 private:
  nn::UNet net_;
  nn::ParamSet params_;
};

/// Reflect padding (mirror without repeating the edge) on the bottom/right.
/// Pads longer than the image keep folding.
ad::Tensor reflect_pad(const ad::Tensor& x, int height, int width);
ad::Tensor crop(const ad::Tensor& x, int height, int width);

struct Decomposition {
  LinearImage wb_image;
  WBKernel wb_kernel;
  LinearImage material;
  ShadingMap shading_predicted;                 // 1 channel
  std::optional<ShadingMap> shading_estimated;  // needs the texture
  LinearImage reflectance;
};

/// Assembles a decomposition from a kernel, a material and a shading map.
/// With a texture: R = M * T and lam_e = sum_c I_wb / max(sum_c R, eps).
/// Without: R = M * T~ where T~ = I_wb / max(M * lam_p, eps).
Decomposition assemble(const LinearImage& input, const WBKernel& kernel, const LinearImage& material,
                       const ShadingMap& shading, const LinearImage* texture);

/// Two-stage network path: I -> WB^ -> I^_wb -> (M^, lam_p).
Decomposition infer(const LinearImage& input, const Model& wbnet, const Model& smtnet,
                    const LinearImage* texture = nullptr);

/// (M * T * lam_p) / WB, the composite the decomposition explains.
LinearImage reconstruct_input(const Decomposition& d, const LinearImage& texture);

/// Writes PFMs, index.json and an sRGB preview strip
/// (input | wb image | material | shading | reflectance).
void save_decomposition(const std::filesystem::path& dir, const LinearImage& input, const Decomposition& d);

}  // namespace dociiw::pipeline
