#include "dociiw/pipeline/infer.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "dociiw/ad/ops.hpp"
#include "dociiw/error.hpp"
#include "dociiw/image_io.hpp"
#include "dociiw/imaging.hpp"
#include "dociiw/pipeline/dataset.hpp"
#include "json.hpp"

namespace dociiw::pipeline {

Model::Model(nn::NetConfig config, nn::ParamSet params) : net_(std::move(config)), params_(std::move(params)) {}

Model Model::from_checkpoint(const nn::Checkpoint& ckpt) { return Model(ckpt.config, ckpt.params); }

Model Model::load(const std::filesystem::path& path, const nn::NetConfig& expected) {
  return from_checkpoint(nn::load_checkpoint(path, expected));
}

ad::Tensor reflect_pad(const ad::Tensor& x, int height, int width) {
  const int c = x.shape.c(), h = x.shape.h(), w = x.shape.w();
  if (height < h || width < w) throw Error(Errc::InvalidArgument, "reflect_pad cannot shrink");
  // folds back and forth for pads longer than the image; a 1-pixel axis repeats
  auto mirror = [](int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    return i < n ? i : period - i;
  };
  ad::Tensor out = ad::Tensor::zeros(ad::Shape::image(c, height, width));
  for (int k = 0; k < c; ++k) {
    for (int y = 0; y < height; ++y) {
      for (int xx = 0; xx < width; ++xx) out.at(k, y, xx) = x.at(k, mirror(y, h), mirror(xx, w));
    }
  }
  return out;
}

ad::Tensor crop(const ad::Tensor& x, int height, int width) {
  const int c = x.shape.c();
  ad::Tensor out = ad::Tensor::zeros(ad::Shape::image(c, height, width));
  for (int k = 0; k < c; ++k) {
    for (int y = 0; y < height; ++y) {
      for (int xx = 0; xx < width; ++xx) out.at(k, y, xx) = x.at(k, y, xx);
    }
  }
  return out;
}

std::vector<ad::Tensor> Model::run(const ad::Tensor& input) const {
  const int d = net_.config().divisor();
  const int h = input.shape.h(), w = input.shape.w();
  const int ph = (h + d - 1) / d * d, pw = (w + d - 1) / d * d;
  ad::Tape tape;
  const auto vars = net_.bind_frozen(tape, params_);
  const ad::Var x = tape.constant(ph == h && pw == w ? input : reflect_pad(input, ph, pw), "input");
  std::vector<ad::Tensor> out;
  for (const ad::Var& head : net_.forward(vars, x)) {
    out.push_back(ph == h && pw == w ? head.value() : crop(head.value(), h, w));
  }
  return out;
}

Decomposition assemble(const LinearImage& input, const WBKernel& kernel, const LinearImage& material,
                       const ShadingMap& shading, const LinearImage* texture) {
  if (shading.channels() != 1) throw Error(Errc::ShapeMismatch, "predicted shading must have one channel");
  Decomposition d;
  d.wb_image = apply_wb(kernel, input);
  d.wb_kernel = kernel;
  d.material = material;
  d.shading_predicted = shading;
  if (texture) {
    d.reflectance = hadamard(material, *texture);
    const ScalarField num = intensity(d.wb_image);
    const ScalarField den = intensity(d.reflectance);
    std::vector<float> est(num.size());
    for (std::size_t i = 0; i < est.size(); ++i) {
      est[i] = std::max(num[i] / std::max(den[i], kDivideEps), std::numeric_limits<float>::min());
    }
    d.shading_estimated = ShadingMap(input.width(), input.height(), 1, std::move(est));
  } else {
    const LinearImage texture_est = divide_safe(d.wb_image, hadamard(material, shading));
    d.reflectance = hadamard(material, texture_est);
  }
  return d;
}

Decomposition infer(const LinearImage& input, const Model& wbnet, const Model& smtnet, const LinearImage* texture) {
  if (texture && texture->extent() != input.extent()) throw Error(Errc::ShapeMismatch, "texture size differs");
  const auto wb = wbnet.run(to_tensor(input));
  const WBKernel kernel = to_kernel(wb.at(0));
  const LinearImage wb_image = apply_wb(kernel, input);
  const auto smt = smtnet.run(to_tensor(wb_image));
  return assemble(input, kernel, to_linear_image(smt.at(0)), to_shading(smt.at(1)), texture);
}

LinearImage reconstruct_input(const Decomposition& d, const LinearImage& texture) {
  const LinearImage explained = hadamard(hadamard(d.material, texture), d.shading_predicted);
  return divide_safe(explained, d.wb_kernel);
}

namespace {

// Each panel is linear RGB; single-channel maps are replicated.
void paste(std::vector<float>& strip, int strip_width, int offset, const Raster& r) {
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        strip[(static_cast<std::size_t>(y) * strip_width + offset + x) * 3 + c] =
            r.at(x, y, r.channels() == 1 ? 0 : c);
      }
    }
  }
}

}  // namespace

void save_decomposition(const std::filesystem::path& dir, const LinearImage& input, const Decomposition& d) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
  io::write_pfm(dir / "wb_image.pfm", d.wb_image);
  io::write_pfm(dir / "wb_kernel.pfm", d.wb_kernel);
  io::write_pfm(dir / "material.pfm", d.material);
  io::write_pfm(dir / "shading_predicted.pfm", d.shading_predicted);
  if (d.shading_estimated) io::write_pfm(dir / "shading_estimated.pfm", *d.shading_estimated);
  io::write_pfm(dir / "reflectance.pfm", d.reflectance);

  const int w = input.width(), h = input.height(), panels = 5;
  std::vector<float> strip(static_cast<std::size_t>(w) * panels * h * 3, 0.0f);
  const Raster* order[] = {&input, &d.wb_image, &d.material, &d.shading_predicted, &d.reflectance};
  for (int i = 0; i < panels; ++i) paste(strip, w * panels, i * w, *order[i]);
  io::write_png(dir / "preview.png", LinearImage(w * panels, h, std::move(strip)), true);

  nlohmann::json index = {
      {"width", w},
      {"height", h},
      {"wb_image", "wb_image.pfm"},
      {"wb_kernel", "wb_kernel.pfm"},
      {"material", "material.pfm"},
      {"shading_predicted", "shading_predicted.pfm"},
      {"shading_estimated", d.shading_estimated ? nlohmann::json("shading_estimated.pfm") : nlohmann::json(nullptr)},
      {"reflectance", "reflectance.pfm"},
      {"preview", "preview.png"},
  };
  std::ofstream out(dir / "index.json");
  out << index.dump(2) << '\n';
  if (!out) throw Error(Errc::IoError, "cannot write " + (dir / "index.json").string());
}

}  // namespace dociiw::pipeline
