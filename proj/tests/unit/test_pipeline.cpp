#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dociiw/error.hpp"
#include "dociiw/image_io.hpp"
#include "dociiw/imaging.hpp"
#include "dociiw/manifest.hpp"
#include "dociiw/pipeline/dataset.hpp"
#include "dociiw/pipeline/evaluate.hpp"
#include "dociiw/pipeline/infer.hpp"
#include "dociiw/pipeline/train.hpp"
#include "dociiw/synth.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace dociiw;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("dociiw_pipe_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Tiny shared dataset: 16x16, 6 train / 3 val.
const fs::path& tiny_manifest() {
  static const fs::path m = [] {
    synth::SynthesisParams p;
    p.width = p.height = 16;
    p.train_samples = 6;
    p.val_samples = 3;
    p.seed = 21;
    return synth::build_procedural_dataset(p, scratch("data")).manifest;
  }();
  return m;
}

pipeline::TrainConfig tiny_cfg(const std::string& out) {
  pipeline::TrainConfig c;
  c.manifest = tiny_manifest();
  c.out_dir = scratch(out);
  c.epochs = 2;
  c.batch = 4;
  c.depth = 2;
  c.width = 4;
  return c;
}

}  // namespace

TEST_CASE("tensor conversions are inverse") {
  oracle::Gen gen(1);
  const auto img = gen.image(5, 3, 0, 1);
  const auto t = pipeline::to_tensor(img);
  CHECK(t.shape == ad::Shape{3, 3, 5});
  CHECK(t.at(1, 2, 4) == img.at(4, 2, 1));
  const auto back = pipeline::to_linear_image(t);
  CHECK(std::equal(back.data().begin(), back.data().end(), img.data().begin()));
}

TEST_CASE("reflect padding mirrors without repeating the edge and crops back") {
  oracle::Gen gen(2);
  const auto x = gen.tensor(ad::Shape{2, 5, 3}, 0, 1);
  const auto p = pipeline::reflect_pad(x, 8, 8);
  CHECK(p.shape == ad::Shape{2, 8, 8});
  CHECK(p.at(1, 5, 0) == x.at(1, 3, 0));
  CHECK(p.at(0, 0, 3) == x.at(0, 0, 1));
  CHECK(pipeline::crop(p, 5, 3).data == x.data);
  // folding: column 5 of a 3-wide row maps back to column 1
  CHECK(p.at(0, 0, 5) == x.at(0, 0, 1));
  CHECK(p.at(0, 0, 6) == x.at(0, 0, 2));
  const auto one = pipeline::reflect_pad(gen.tensor(ad::Shape{1, 1, 1}, 0, 1), 4, 4);
  for (float v : one.data) CHECK(v == one.data[0]);
}

TEST_CASE("ground-truth path reconstructs every sample's input") {
  const auto entries = synth::read_manifest(tiny_manifest());
  const auto root = tiny_manifest().parent_path();
  for (const auto& e : entries) {
    const auto input = io::read_pfm(root / e.input);
    const auto tex = io::read_pfm(root / e.texture);
    const auto mask = io::read_mask_png(root / e.mask);
    const auto d = pipeline::assemble(input, io::read_pfm_kernel(root / e.kernel_gt), io::read_pfm(root / e.material_gt),
                                      io::read_pfm_shading(root / e.shading_gt), &tex);
    const auto recon = pipeline::reconstruct_input(d, tex);
    double s = 0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < mask.extent().pixels(); ++p)
      if (mask[p])
        for (int c = 0; c < 3; ++c, ++n) s += std::abs(recon[3 * p + c] - input[3 * p + c]);
    CHECK(s / n < 1e-4);
    REQUIRE(d.shading_estimated.has_value());
    // with the true texture the estimated shading is the true shading
    const auto lam = io::read_pfm_shading(root / e.shading_gt);
    for (std::size_t p = 0; p < mask.extent().pixels(); ++p)
      if (mask[p]) CHECK(std::abs((*d.shading_estimated)[p] - lam[p]) < 1e-4f);
  }
}

TEST_CASE("assemble without a texture") {
  oracle::Gen gen(3);
  const auto input = gen.image(4, 4, 0.1, 1);
  const auto kernel = WBKernel::filled(4, 4, 1.2f, 1.0f, 0.8f);
  const auto m = gen.image(4, 4, 0.5, 1);
  const auto lam = gen.shading(4, 4, 1, 0.2, 1);
  const auto d = pipeline::assemble(input, kernel, m, lam, nullptr);
  CHECK_FALSE(d.shading_estimated.has_value());
  const auto iwb = apply_wb(kernel, input);
  for (int p = 0; p < 16; ++p)
    for (int c = 0; c < 3; ++c) {
      CHECK(d.wb_image[3 * p + c] == doctest::Approx(iwb[3 * p + c]));
      CHECK(d.reflectance[3 * p + c] == doctest::Approx(iwb[3 * p + c] / lam[p]).epsilon(1e-5));
    }
}

TEST_CASE("training with lr 0 leaves the validation loss unchanged") {
  auto c = tiny_cfg("lr0");
  c.lr = 0.0f;
  const auto r = pipeline::train_wbnet(c);
  REQUIRE(r.history.size() == 3);
  for (const auto& e : r.history) CHECK(std::abs(e.loss.total - r.history.front().loss.total) < 1e-6);

  auto s = tiny_cfg("lr0_smt");
  s.lr = 0.0f;
  const auto rs = pipeline::train_smtnet(s);
  for (const auto& e : rs.history) CHECK(std::abs(e.loss.total - rs.history.front().loss.total) < 1e-6);
}

TEST_CASE("same seed gives identical checkpoints and logs; resume continues exactly") {
  auto a = tiny_cfg("det_a"), b = tiny_cfg("det_b");
  const auto ra = pipeline::train_smtnet(a), rb = pipeline::train_smtnet(b);
  CHECK(slurp(ra.checkpoint) == slurp(rb.checkpoint));
  CHECK(slurp(ra.log) == slurp(rb.log));
  CHECK(ra.steps == 4);

  auto one = tiny_cfg("resume_1");
  one.epochs = 1;
  const auto r1 = pipeline::train_smtnet(one);
  auto two = tiny_cfg("resume_2");
  two.resume = r1.checkpoint;
  const auto r2 = pipeline::train_smtnet(two);
  CHECK(slurp(r2.checkpoint) == slurp(ra.checkpoint));
  CHECK(r2.history.back().loss.total == ra.history.back().loss.total);
}

TEST_CASE("training log records every step and validation") {
  const auto r = pipeline::train_wbnet(tiny_cfg("log"));
  std::ifstream f(r.log);
  std::string line;
  int train = 0, val = 0;
  while (std::getline(f, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("step"));
    CHECK(j.contains("total"));
    CHECK(j.contains("L_wb"));
    if (j["split"] == "train") ++train;
    if (j["split"] == "val") {
      ++val;
      CHECK(j.contains("angular_error"));
    }
  }
  CHECK(train == 4);
  CHECK(val == 3);
  CHECK(fs::exists(r.checkpoint));
  CHECK(fs::exists(r.checkpoint.parent_path() / "checkpoints" / "wbnet_e001.ckpt"));
}

TEST_CASE("configuration contracts") {
  auto c = tiny_cfg("bad");
  c.batch = 7;
  CHECK_THROWS_AS(pipeline::train_wbnet(c), Error);
  c = tiny_cfg("bad");
  c.epochs = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = tiny_cfg("bad");
  c.wb_source = pipeline::WbSource::Checkpoint;
  CHECK_THROWS_AS(c.validate(), Error);
  c = tiny_cfg("bad");
  c.manifest = "/nonexistent/manifest.jsonl";
  CHECK_THROWS_AS(pipeline::train_wbnet(c), Error);
}

TEST_CASE("chained stage two and inference on odd sizes") {
  const auto wb = pipeline::train_wbnet(tiny_cfg("chain_wb"));
  auto s = tiny_cfg("chain_smt");
  s.epochs = 1;
  s.wb_source = pipeline::WbSource::Checkpoint;
  s.wb_checkpoint = wb.checkpoint;
  const auto smt = pipeline::train_smtnet(s);

  const auto wbm = pipeline::Model::from_checkpoint(nn::load_checkpoint(wb.checkpoint));
  const auto smtm = pipeline::Model::from_checkpoint(nn::load_checkpoint(smt.checkpoint));
  CHECK_THROWS_AS(pipeline::Model::load(wb.checkpoint, nn::NetConfig::smtnet(2, 4)), Error);

  oracle::Gen gen(4);
  const auto img = gen.image(13, 7, 0.05, 1.5);
  const auto d = pipeline::infer(img, wbm, smtm);
  for (const Raster* r : {static_cast<const Raster*>(&d.wb_image), static_cast<const Raster*>(&d.wb_kernel),
                          static_cast<const Raster*>(&d.material), static_cast<const Raster*>(&d.shading_predicted),
                          static_cast<const Raster*>(&d.reflectance)}) {
    CHECK(r->width() == 13);
    CHECK(r->height() == 7);
    for (float v : r->data()) CHECK(std::isfinite(v));
  }
  for (float v : d.material.data()) CHECK((v > 0.0f && v < 1.0f));
  for (float v : d.shading_predicted.data()) CHECK(v > 0.0f);
  for (float v : d.wb_kernel.data()) CHECK(v >= 0.0f);

  const auto out = scratch("decomp");
  pipeline::save_decomposition(out, img, d);
  for (const char* f : {"wb_image.pfm", "wb_kernel.pfm", "material.pfm", "shading_predicted.pfm", "reflectance.pfm",
                        "preview.png", "index.json"})
    CHECK(fs::exists(out / f));
  const auto preview = io::read_png(out / "preview.png");
  CHECK(preview.width() == 5 * 13);
  CHECK(io::read_pfm(out / "reflectance.pfm").width() == 13);

  // evaluation plumbing, with a stand-in OCR command
  pipeline::EvalOptions opts;
  opts.work_dir = scratch("eval");
  opts.metrics.ocr_cmd = "test -s {input} && printf 'X'";
  opts.metrics.ms_ssim_levels = 1;
  synth::SynthesisParams tp;
  tp.width = tp.height = 32;
  tp.train_samples = 1;
  tp.val_samples = 2;
  tp.text_density = 1.0;
  const auto texty = synth::build_procedural_dataset(tp, scratch("texty")).manifest;
  const auto ev = pipeline::evaluate_manifest(texty, wbm, smtm, opts);
  CHECK(ev.report.samples() == 2);
  CHECK(ev.ocr == metrics::OcrStatus::Ok);
  const auto agg = ev.report.aggregate();
  CHECK(agg.count("ms_ssim_after") == 1);
  CHECK(agg.count("cer_before") == 1);

  opts.metrics.ocr_cmd = "definitely-not-an-ocr-binary {input}";
  const auto missing = pipeline::evaluate_manifest(texty, wbm, smtm, opts);
  CHECK(missing.ocr == metrics::OcrStatus::Unavailable);
  CHECK(missing.report.aggregate().count("cer_after") == 0);
}
