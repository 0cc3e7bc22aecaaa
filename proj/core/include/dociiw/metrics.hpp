#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dociiw/imaging.hpp"
#include "dociiw/raster.hpp"

namespace dociiw::metrics {

struct MetricOptions {
  std::string ocr_cmd;  // empty: OCR disabled
  int ocr_timeout_ms = 60000;
  int ld_block = 8;
  int ld_search = 4;
  int ms_ssim_levels = 0;  // 0 picks the largest the size admits
};

/// Multi-scale SSIM on Rec. 709 luminance: 11-tap Gaussian window
/// (sigma 1.5), valid filtering, 2x2 average downsampling between scales,
/// K1 = 0.01, K2 = 0.03, dynamic range 1. Uses the first `levels` of the
/// five standard exponents, renormalized to sum to one. Requires the smaller
/// side to be at least 2^(levels-1) * 11 (TooSmall otherwise). levels == 1 is
/// plain SSIM.
double ms_ssim(const LinearImage& a, const LinearImage& b, int levels = 5);

/// Largest level count (<= 5) the image size admits; throws TooSmall below 11 px.
int ms_ssim_levels(Extent extent);

/// Simplified local distortion: for every non-overlapping `block` x `block`
/// tile of `a` with non-flat content, the offset within +-`search` pixels
/// that maximizes zero-mean normalized cross-correlation in `b`. Returns the
/// mean offset length. Ties go to the shorter offset.
double local_distortion(const LinearImage& a, const LinearImage& b, int block = 8, int search = 4);

/// Levenshtein distance between two sequences.
template <class Seq>
std::size_t edit_distance(const Seq& a, const Seq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// UTF-8 code points; malformed bytes count as one unit each.
std::vector<char32_t> code_points(std::string_view text);
/// Whitespace-separated tokens.
std::vector<std::string> words(std::string_view text);

/// Character / word edit distance over the reference length. Throws
/// EmptyReference when the reference has no characters (words).
double cer(std::string_view reference, std::string_view hypothesis);
double wer(std::string_view reference, std::string_view hypothesis);

/// Angle between two RGB vectors in degrees. Throws ZeroVector.
double angular_error(const Rgb& estimated, const Rgb& truth);

enum class OcrStatus { Ok, Unavailable, Timeout };

struct OcrResult {
  OcrStatus status = OcrStatus::Unavailable;
  std::string text;
  std::string message;
};

/// Runs `command_template` through /bin/sh with every "{input}" replaced by
/// the quoted image path and returns its standard output. A missing binary,
/// a non-zero exit or a missing placeholder yield Unavailable; exceeding
/// `timeout` kills the process and yields Timeout. Never throws.
OcrResult run_ocr(const std::filesystem::path& image, const std::string& command_template,
                  std::chrono::milliseconds timeout = std::chrono::seconds(60));

std::string_view to_string(OcrStatus s) noexcept;

/// Per-sample rows plus column means.
class MetricReport {
 public:
  void add(std::string id, std::map<std::string, double> values);

  std::size_t samples() const noexcept { return rows_.size(); }
  /// Mean of every metric over the rows that carry it.
  std::map<std::string, double> aggregate() const;
  const std::vector<std::pair<std::string, std::map<std::string, double>>>& rows() const noexcept { return rows_; }

  std::string to_json() const;
  std::string to_table() const;

 private:
  std::vector<std::pair<std::string, std::map<std::string, double>>> rows_;
};

}  // namespace dociiw::metrics
