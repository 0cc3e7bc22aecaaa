#include <cmath>

#include "doctest.h"
#include "dociiw/error.hpp"
#include "dociiw/image_io.hpp"
#include "dociiw/metrics.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "ref_ssim.hpp"

using namespace dociiw;
using namespace std::chrono_literals;

namespace {

std::vector<float> raw(const LinearImage& img) { return {img.data().begin(), img.data().end()}; }

// Smooth random texture with structure at several scales.
LinearImage textured(int w, int h, oracle::Gen& gen) {
  std::vector<float> d(static_cast<std::size_t>(w) * h * 3);
  const double fx = gen.uniform(0.2, 0.5), fy = gen.uniform(0.2, 0.5), ph = gen.uniform(0, 6);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = 0.5 + 0.25 * std::sin(fx * x + ph) * std::cos(fy * y) + 0.15 * std::sin(0.07 * x * y / 7.0);
      for (int c = 0; c < 3; ++c) d[(static_cast<std::size_t>(y) * w + x) * 3 + c] = static_cast<float>(v * (0.8 + 0.1 * c));
    }
  return LinearImage(w, h, std::move(d));
}

LinearImage add_noise(const LinearImage& img, double sigma, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  auto d = raw(img);
  for (float& v : d) v = static_cast<float>(std::max(0.0, v + sigma * n(eng)));
  return LinearImage(img.width(), img.height(), std::move(d));
}

}  // namespace

TEST_CASE("ms_ssim: identity, symmetry, size floor") {
  oracle::Gen gen(1);
  const auto a = textured(64, 64, gen), b = add_noise(a, 0.1, 3);
  CHECK(metrics::ms_ssim(a, a, 3) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(metrics::ms_ssim(a, b, 3) - metrics::ms_ssim(b, a, 3)) < 1e-6);
  CHECK(metrics::ms_ssim_levels(a.extent()) == 3);
  CHECK_THROWS_AS(metrics::ms_ssim(a, a, 4), Error);
  CHECK_THROWS_AS(metrics::ms_ssim(LinearImage::filled(10, 10, 0.5f), LinearImage::filled(10, 10, 0.5f), 1), Error);
}

TEST_CASE("ms_ssim matches the stand-alone reference") {
  oracle::Gen gen(2);
  const auto flat = LinearImage::filled(64, 64, 0.5f);
  const auto noisy = add_noise(flat, 0.1, 5);
  for (int levels : {1, 3}) {
    CHECK(std::abs(metrics::ms_ssim(flat, noisy, levels) - oracle::ref_ms_ssim(raw(flat), raw(noisy), 64, 64, levels)) < 1e-3);
  }
  const auto base = textured(176, 176, gen);
  const LinearImage pairs[][2] = {
      {base, add_noise(base, 0.05, 1)},
      {base, add_noise(base, 0.2, 2)},
      {base, textured(176, 176, gen)},
      {base, LinearImage::filled(176, 176, 0.4f)},
  };
  for (const auto& p : pairs) {
    for (int levels : {1, 5}) {
      const double got = metrics::ms_ssim(p[0], p[1], levels);
      const double want = oracle::ref_ms_ssim(raw(p[0]), raw(p[1]), 176, 176, levels);
      CHECK(std::abs(got - want) < 1e-3);
    }
  }
}

TEST_CASE("property: ms_ssim does not increase with noise") {
  oracle::Gen gen(3);
  for (int trial = 0; trial < 3; ++trial) {
    const auto img = textured(96, 96, gen);
    double prev = 2.0;
    for (double sigma : {0.0, 0.05, 0.1, 0.2}) {
      const double v = metrics::ms_ssim(img, add_noise(img, sigma, 100 + trial), 4);
      CHECK(v <= prev + 1e-9);
      prev = v;
    }
  }
}

TEST_CASE("local distortion: zero, constructed shift, brightness invariance") {
  oracle::Gen gen(4);
  const auto a = add_noise(textured(64, 64, gen), 0.05, 9);
  CHECK(metrics::local_distortion(a, a, 8, 4) == 0.0);

  auto d = raw(a);
  std::vector<float> shifted(d.size());
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      for (int c = 0; c < 3; ++c) shifted[(y * 64 + x) * 3 + c] = d[(y * 64 + (x + 62) % 64) * 3 + c];
  const LinearImage b(64, 64, shifted);
  CHECK(std::abs(metrics::local_distortion(a, b, 8, 4) - 2.0) <= 0.5);

  for (float& v : d) v *= 1.2f;
  CHECK(metrics::local_distortion(a, LinearImage(64, 64, d), 8, 4) == doctest::Approx(0.0));
  CHECK_THROWS_AS(metrics::local_distortion(LinearImage::filled(4, 4, 1.0f), LinearImage::filled(4, 4, 1.0f), 8, 4),
                  Error);
}

TEST_CASE("cer and wer: hand cases and the DP oracle") {
  CHECK(metrics::cer("hello", "hello") == 0.0);
  CHECK(metrics::cer("hello", "hallo") == doctest::Approx(0.2));
  CHECK(metrics::wer("the cat sat", "the cat sat") == 0.0);
  CHECK(metrics::wer("the cat sat", "the bat sat down") == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(metrics::cer("", "x"), Error);
  CHECK_THROWS_AS(metrics::wer("   ", "x"), Error);
  CHECK(metrics::cer("h\xC3\xA9llo", "hello") == doctest::Approx(0.2));

  oracle::Gen gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::string a = gen.text(20, "ab c");
    if (a.find_first_not_of(' ') == std::string::npos) a += "x";
    const std::string b = gen.text(20, "ab c");
    const double c = metrics::cer(a, b);
    CHECK(c * a.size() == doctest::Approx(double(oracle::levenshtein(a, b))).epsilon(1e-12));
    CHECK((c == 0.0) == (a == b));
    const auto wa = oracle::split_words(a), wb = oracle::split_words(b);
    const double w = metrics::wer(a, b);
    CHECK(w * wa.size() == doctest::Approx(double(oracle::levenshtein(wa, wb))).epsilon(1e-12));
    CHECK((w == 0.0) == (wa == wb));
  }
}

TEST_CASE("angular error") {
  CHECK(metrics::angular_error({1, 2, 3}, {1, 2, 3}) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(metrics::angular_error({1, 0, 0}, {0, 1, 0}) == doctest::Approx(90.0));
  CHECK(metrics::angular_error({1, 1, 0}, {1, 0, 0}) == doctest::Approx(45.0));
  CHECK_THROWS_AS(metrics::angular_error({0, 0, 0}, {1, 0, 0}), Error);
  oracle::Gen gen(6);
  for (int i = 0; i < 100; ++i) {
    const Rgb a{float(gen.uniform(0.01, 1)), float(gen.uniform(0.01, 1)), float(gen.uniform(0.01, 1))};
    const Rgb b{float(gen.uniform(0.01, 1)), float(gen.uniform(0.01, 1)), float(gen.uniform(0.01, 1))};
    const float s = float(gen.uniform(0.1, 10)), t = float(gen.uniform(0.1, 10));
    const double e = metrics::angular_error(a, b);
    CHECK(metrics::angular_error(b, a) == doctest::Approx(e).epsilon(1e-5));
    CHECK(metrics::angular_error({s * a[0], s * a[1], s * a[2]}, {t * b[0], t * b[1], t * b[2]}) ==
          doctest::Approx(e).epsilon(1e-3));
  }
}

TEST_CASE("run_ocr never crashes") {
  const auto img = std::filesystem::temp_directory_path() / "dociiw_ocr.png";
  io::write_png(img, LinearImage::filled(4, 4, 0.5f));
  const auto ok = metrics::run_ocr(img, "test -s {input} && printf 'HELLO WORLD'");
  CHECK(ok.status == metrics::OcrStatus::Ok);
  CHECK(ok.text == "HELLO WORLD");
  CHECK(metrics::run_ocr(img, "no-such-ocr-binary {input}").status == metrics::OcrStatus::Unavailable);
  CHECK(metrics::run_ocr(img, "printf 'no placeholder'").status == metrics::OcrStatus::Unavailable);
  CHECK(metrics::run_ocr(img, "sleep 5; echo {input}", 200ms).status == metrics::OcrStatus::Timeout);
  CHECK(metrics::to_string(metrics::OcrStatus::Unavailable) == "OcrUnavailable");
  std::filesystem::remove(img);
}

TEST_CASE("report aggregates are column means") {
  metrics::MetricReport r;
  oracle::Gen gen(7);
  double sum_a = 0.0, sum_b = 0.0;
  int nb = 0;
  for (int i = 0; i < 10; ++i) {
    const double a = gen.uniform(0, 1), b = gen.uniform(0, 1);
    sum_a += a;
    std::map<std::string, double> row{{"a", a}};
    if (i % 3 == 0) {
      row["b"] = b;
      sum_b += b;
      ++nb;
    }
    r.add("s" + std::to_string(i), row);
  }
  CHECK(r.samples() == 10);
  CHECK(std::abs(r.aggregate().at("a") - sum_a / 10) < 1e-6);
  CHECK(std::abs(r.aggregate().at("b") - sum_b / nb) < 1e-6);
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j.contains("aggregate"));
  CHECK(r.to_table().find("mean") != std::string::npos);
}
