#include "dociiw/pipeline/evaluate.hpp"

#include "dociiw/error.hpp"
#include "dociiw/image_io.hpp"
#include "dociiw/imaging.hpp"
#include "dociiw/manifest.hpp"

namespace dociiw::pipeline {

namespace {

std::map<std::string, double> image_scores(const LinearImage& candidate, const LinearImage& reference,
                                           const metrics::MetricOptions& o, const std::string& suffix) {
  const int levels = o.ms_ssim_levels > 0 ? o.ms_ssim_levels : metrics::ms_ssim_levels(reference.extent());
  return {{"ms_ssim" + suffix, metrics::ms_ssim(candidate, reference, levels)},
          {"ld" + suffix, metrics::local_distortion(candidate, reference, o.ld_block, o.ld_search)}};
}

}  // namespace

EvalOutcome evaluate_manifest(const std::filesystem::path& manifest, const Model& wbnet, const Model& smtnet,
                              const EvalOptions& opts) {
  const auto entries = synth::read_manifest(manifest);
  const auto root = manifest.parent_path();
  const bool want_ocr = !opts.metrics.ocr_cmd.empty();
  if (want_ocr) {
    if (opts.work_dir.empty()) throw Error(Errc::InvalidArgument, "evaluate: OCR needs a work directory");
    std::filesystem::create_directories(opts.work_dir);
  }
  EvalOutcome out;
  out.ocr = want_ocr ? metrics::OcrStatus::Ok : metrics::OcrStatus::Unavailable;
  if (!want_ocr) out.ocr_message = "no OCR command configured";

  std::size_t used = 0;
  for (const auto& e : entries) {
    if (e.split != opts.split) continue;
    if (opts.limit && used >= opts.limit) break;
    ++used;
    const LinearImage input = io::read_pfm(root / e.input);
    const LinearImage truth = hadamard(io::read_pfm(root / e.material_gt), io::read_pfm(root / e.texture));
    const Decomposition d = infer(input, wbnet, smtnet, nullptr);

    auto row = image_scores(input, truth, opts.metrics, "_before");
    row.merge(image_scores(d.reflectance, truth, opts.metrics, "_after"));

    if (want_ocr && out.ocr == metrics::OcrStatus::Ok && !e.text.empty()) {
      const auto before = opts.work_dir / (e.id + "_before.png");
      const auto after = opts.work_dir / (e.id + "_after.png");
      io::write_png(before, input, true);
      io::write_png(after, d.reflectance, true);
      const auto timeout = std::chrono::milliseconds(opts.metrics.ocr_timeout_ms);
      const auto rb = metrics::run_ocr(before, opts.metrics.ocr_cmd, timeout);
      const auto ra = rb.status == metrics::OcrStatus::Ok ? metrics::run_ocr(after, opts.metrics.ocr_cmd, timeout) : rb;
      if (ra.status != metrics::OcrStatus::Ok || rb.status != metrics::OcrStatus::Ok) {
        out.ocr = rb.status != metrics::OcrStatus::Ok ? rb.status : ra.status;
        out.ocr_message = rb.status != metrics::OcrStatus::Ok ? rb.message : ra.message;
      } else {
        row["cer_before"] = metrics::cer(e.text, rb.text);
        row["cer_after"] = metrics::cer(e.text, ra.text);
        row["wer_before"] = metrics::wer(e.text, rb.text);
        row["wer_after"] = metrics::wer(e.text, ra.text);
      }
    }
    out.report.add(e.id, std::move(row));
  }
  if (used == 0) throw Error(Errc::InvalidArgument, "evaluate: no records in split '" + opts.split + "'");
  return out;
}

metrics::MetricReport evaluate_pairs(const std::vector<std::pair<std::filesystem::path, std::filesystem::path>>& pairs,
                                     const metrics::MetricOptions& opts, bool srgb_decode) {
  metrics::MetricReport report;
  for (const auto& [cand, ref] : pairs) {
    const LinearImage a = io::read_image(cand, srgb_decode);
    const LinearImage b = io::read_image(ref, srgb_decode);
    report.add(cand.filename().string(), image_scores(a, b, opts, ""));
  }
  return report;
}

}  // namespace dociiw::pipeline
