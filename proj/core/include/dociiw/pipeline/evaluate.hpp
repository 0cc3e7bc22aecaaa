#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dociiw/metrics.hpp"
#include "dociiw/pipeline/infer.hpp"

namespace dociiw::pipeline {

struct EvalOptions {
  metrics::MetricOptions metrics;
  /// OCR renders go here; required when metrics.ocr_cmd is set.
  std::filesystem::path work_dir;
  std::string split = "val";
  std::size_t limit = 0;  // 0: every record of the split
};

struct EvalOutcome {
  metrics::MetricReport report;
  metrics::OcrStatus ocr = metrics::OcrStatus::Unavailable;
  std::string ocr_message;
};

/// Runs the two-stage networks on every record of the split (without the
/// texture, as on a real photograph) and scores the input and the recovered
/// reflectance against the ground-truth reflectance M * T:
/// ms_ssim_{before,after}, ld_{before,after}, and with OCR
/// cer_/wer_{before,after} against the record's text.
EvalOutcome evaluate_manifest(const std::filesystem::path& manifest, const Model& wbnet, const Model& smtnet,
                              const EvalOptions& opts);

/// ms_ssim and local_distortion for (candidate, reference) image pairs.
metrics::MetricReport evaluate_pairs(const std::vector<std::pair<std::filesystem::path, std::filesystem::path>>& pairs,
                                     const metrics::MetricOptions& opts, bool srgb_decode);

}  // namespace dociiw::pipeline
