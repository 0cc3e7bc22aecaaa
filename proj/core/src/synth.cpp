#include "dociiw/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "dociiw/error.hpp"
#include "dociiw/image_io.hpp"
#include "dociiw/manifest.hpp"
#include "dociiw/parallel.hpp"
#include "font5x7.hpp"

namespace dociiw::synth {

void SynthesisParams::validate() const {
  if (width < 3 || height < 3) throw Error(Errc::InvalidArgument, "synthesis: image size must be at least 3x3");
  if (shading_octaves < 0) throw Error(Errc::InvalidArgument, "synthesis: negative octave count");
  if (!(shading_lo > 0.0f)) throw Error(Errc::OutOfRange, "synthesis: shading amplitude lower bound must be > 0");
  if (!(shading_hi >= shading_lo)) throw Error(Errc::OutOfRange, "synthesis: shading amplitude range is inverted");
  if (!(shading_hi <= 2.0f)) throw Error(Errc::OutOfRange, "synthesis: shading amplitude upper bound must be <= 2");
  for (int c = 0; c < 3; ++c) {
    if (!(tint_lo[c] > 0.0f && tint_hi[c] >= tint_lo[c] && tint_hi[c] <= 1.0f)) {
      throw Error(Errc::OutOfRange, "synthesis: tint bounds must satisfy 0 < lo <= hi <= 1");
    }
  }
  if (!(tint_variation >= 0.0f)) throw Error(Errc::OutOfRange, "synthesis: tint variation must be >= 0");
  if (!(cct_lo >= kMinCct && cct_hi <= kMaxCct && cct_lo <= cct_hi)) {
    throw Error(Errc::OutOfRange, "synthesis: CCT range must lie within [1667, 25000] K");
  }
  if (!(two_light_probability >= 0.0 && two_light_probability <= 1.0)) {
    throw Error(Errc::OutOfRange, "synthesis: two-light probability must lie in [0, 1]");
  }
  if (!(text_density >= 0.0 && text_density <= 1.0)) throw Error(Errc::OutOfRange, "synthesis: text density");
  if (glyph_scale < 1) throw Error(Errc::InvalidArgument, "synthesis: glyph scale must be >= 1");
  if (!(clip_max > 0.0f)) throw Error(Errc::OutOfRange, "synthesis: clip_max must be positive");
  if (train_samples < 0 || val_samples < 0 || train_samples + val_samples == 0) {
    throw Error(Errc::InvalidArgument, "synthesis: sample counts must be non-negative and not both zero");
  }
}

namespace {

// Smoothly interpolated lattice noise in [-1, 1] with `cells` cells per axis.
std::vector<float> value_noise(int width, int height, int cells, Rng& rng) {
  const int n = cells + 1;
  std::vector<float> lattice(static_cast<std::size_t>(n) * n);
  for (float& v : lattice) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  auto smooth = [](float t) { return t * t * (3.0f - 2.0f * t); };
  std::vector<float> out(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    const float fy = (y + 0.5f) / height * cells;
    const int y0 = std::min(static_cast<int>(fy), cells - 1);
    const float ty = smooth(fy - y0);
    for (int x = 0; x < width; ++x) {
      const float fx = (x + 0.5f) / width * cells;
      const int x0 = std::min(static_cast<int>(fx), cells - 1);
      const float tx = smooth(fx - x0);
      const float a = lattice[y0 * n + x0], b = lattice[y0 * n + x0 + 1];
      const float c = lattice[(y0 + 1) * n + x0], d = lattice[(y0 + 1) * n + x0 + 1];
      out[static_cast<std::size_t>(y) * width + x] = (a + (b - a) * tx) * (1.0f - ty) + (c + (d - c) * tx) * ty;
    }
  }
  return out;
}

ShadingMap to_shading3(const LinearImage& img) {
  const int w = img.width(), h = img.height();
  std::vector<float> d(img.data().begin(), img.data().end());
  return ShadingMap(w, h, 3, std::move(d));
}

}  // namespace

ShadingMap gen_shading_field(const SynthesisParams& params, Rng& rng) {
  const int w = params.width, h = params.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<float> raw(n, 0.0f);

  float amp_total = 0.0f;
  for (int k = 0; k < params.shading_octaves; ++k) {
    const float amp = std::pow(0.5f, static_cast<float>(k));
    const auto octave = value_noise(w, h, 2 << k, rng);
    for (std::size_t i = 0; i < n; ++i) raw[i] += amp * octave[i];
    amp_total += amp;
  }
  if (amp_total > 0.0f) {
    for (float& v : raw) v /= amp_total;
  }
  if (params.shading_gradient) {
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const float strength = static_cast<float>(rng.uniform(-1.0, 1.0));
    const float cx = static_cast<float>(std::cos(theta)), cy = static_cast<float>(std::sin(theta));
    const float noise_share = params.shading_octaves > 0 ? 0.6f : 0.0f;
    for (int y = 0; y < h; ++y) {
      const float ny = 2.0f * (y + 0.5f) / h - 1.0f;
      for (int x = 0; x < w; ++x) {
        const float nx = 2.0f * (x + 0.5f) / w - 1.0f;
        float& v = raw[static_cast<std::size_t>(y) * w + x];
        v = noise_share * v + (1.0f - noise_share) * strength * std::clamp(nx * cx + ny * cy, -1.0f, 1.0f);
      }
    }
  }
  const float mid = 0.5f * (params.shading_lo + params.shading_hi);
  const float half = 0.5f * (params.shading_hi - params.shading_lo);
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::clamp(mid + half * raw[i], params.shading_lo, params.shading_hi);
  }
  return ShadingMap(w, h, 1, std::move(out));
}

LinearImage gen_material(const SynthesisParams& params, Rng& rng) {
  const int w = params.width, h = params.height;
  Rgb tint{};
  for (int c = 0; c < 3; ++c) tint[c] = static_cast<float>(rng.uniform(params.tint_lo[c], params.tint_hi[c]));
  std::vector<float> out(static_cast<std::size_t>(w) * h * 3);
  if (params.tint_variation == 0.0f) {
    for (std::size_t p = 0; p < out.size() / 3; ++p) {
      for (int c = 0; c < 3; ++c) out[p * 3 + c] = tint[c];
    }
    return LinearImage(w, h, std::move(out));
  }
  const auto variation = value_noise(w, h, 2, rng);
  for (std::size_t p = 0; p < variation.size(); ++p) {
    for (int c = 0; c < 3; ++c) {
      out[p * 3 + c] =
          std::clamp(tint[c] * (1.0f + params.tint_variation * variation[p]), params.tint_lo[c], params.tint_hi[c]);
    }
  }
  return LinearImage(w, h, std::move(out));
}

TextTexture gen_text_texture(Rng& rng, const SynthesisParams& params) {
  using detail::kGlyphHeight;
  using detail::kGlyphWidth;
  const int w = params.width, h = params.height, s = params.glyph_scale;
  const float paper = static_cast<float>(rng.uniform(0.85, 0.97));
  const float ink = static_cast<float>(rng.uniform(0.04, 0.2));
  std::vector<float> lum(static_cast<std::size_t>(w) * h, paper);

  const int advance = (kGlyphWidth + 1) * s;
  const int line_height = (kGlyphHeight + 3) * s;
  const int margin = 2 * s;
  static constexpr std::string_view kLetters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  static constexpr std::string_view kDigits = "0123456789";

  auto draw = [&](char ch, int ox, int oy) {
    const auto* g = detail::find_glyph(ch);
    if (!g) return;
    for (int r = 0; r < kGlyphHeight; ++r) {
      for (int col = 0; col < kGlyphWidth; ++col) {
        if (!((g->rows[r] >> (kGlyphWidth - 1 - col)) & 1)) continue;
        for (int dy = 0; dy < s; ++dy) {
          for (int dx = 0; dx < s; ++dx) {
            const int x = ox + col * s + dx, y = oy + r * s + dy;
            if (x >= 0 && x < w && y >= 0 && y < h) lum[static_cast<std::size_t>(y) * w + x] = ink;
          }
        }
      }
    }
  };

  std::string text;
  const int chars_per_line = (w - 2 * margin + s) / advance;
  for (int top = margin; top + kGlyphHeight * s <= h - margin / 2; top += line_height) {
    if (!rng.bernoulli(params.text_density) || chars_per_line < 2) continue;
    std::string line;
    while (true) {
      const int len = 2 + static_cast<int>(rng.below(5));
      const int needed = static_cast<int>(line.size()) + (line.empty() ? 0 : 1) + len;
      if (needed > chars_per_line) break;
      if (!line.empty()) line += ' ';
      const bool numeric = rng.bernoulli(0.1);
      for (int i = 0; i < len; ++i) {
        line += numeric ? kDigits[rng.below(kDigits.size())] : kLetters[rng.below(kLetters.size())];
      }
    }
    if (line.empty()) continue;
    for (std::size_t i = 0; i < line.size(); ++i) draw(line[i], margin + static_cast<int>(i) * advance, top);
    if (!text.empty()) text += '\n';
    text += line;
  }

  std::vector<float> rgb(lum.size() * 3);
  for (std::size_t p = 0; p < lum.size(); ++p) rgb[p * 3] = rgb[p * 3 + 1] = rgb[p * 3 + 2] = lum[p];
  return {LinearImage(w, h, std::move(rgb)), std::move(text)};
}

Sample synth_sample(const LinearImage& texture, const SynthesisParams& params_in, Rng& rng) {
  SynthesisParams params = params_in;
  params.width = texture.width();
  params.height = texture.height();
  params.validate();
  const int w = params.width, h = params.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;

  Sample s;
  s.texture = texture;
  s.material_gt = gen_material(params, rng);

  const int light_count = rng.bernoulli(params.two_light_probability) ? 2 : 1;
  std::vector<ShadingMap> lambdas;
  for (int i = 0; i < light_count; ++i) {
    // uniform in mired space spreads samples evenly along the locus
    const double mired = rng.uniform(1e6 / params.cct_hi, 1e6 / params.cct_lo);
    SampleLight light;
    light.cct = std::clamp(1e6 / mired, params.cct_lo, params.cct_hi);
    light.rgb = planckian_rgb(light.cct);
    s.lights.push_back(light);
    lambdas.push_back(gen_shading_field(params, rng));
  }

  // MS_k = M * lambda_k * l_k (colored) and its white-light twin.
  auto material_shading = [&](const ShadingMap& lambda, const Rgb& color) {
    const IlluminantSpec spec({Light{color, 1.0f}});
    return to_shading3(hadamard(s.material_gt, render_shading(spec, std::span(&lambda, 1))));
  };
  ShadingMap colored, white;
  if (light_count == 1) {
    colored = material_shading(lambdas[0], s.lights[0].rgb);
    white = material_shading(lambdas[0], {1.0f, 1.0f, 1.0f});
    s.shading_gt = lambdas[0];
    s.lights[0].eta = 1.0f;
  } else {
    const float a = static_cast<float>(rng.uniform());
    s.mix_a = a;
    colored = mix_shadings(material_shading(lambdas[0], s.lights[0].rgb), material_shading(lambdas[1], s.lights[1].rgb), a);
    white = mix_shadings(material_shading(lambdas[0], {1.0f, 1.0f, 1.0f}),
                         material_shading(lambdas[1], {1.0f, 1.0f, 1.0f}), a);
    s.shading_gt = mix_shadings(lambdas[0], lambdas[1], a);
    s.lights[0].eta = a;
    s.lights[1].eta = 1.0f - a;
  }

  LinearImage composite = hadamard(texture, colored);
  LinearImage wb = hadamard(texture, white);

  std::vector<float> in(composite.data().begin(), composite.data().end());
  std::vector<float> kernel(n * 3, 0.0f);
  std::vector<std::uint8_t> valid(n, 1);
  std::size_t clipped = 0;
  for (std::size_t p = 0; p < n; ++p) {
    bool ok = true;
    bool clip = false;
    for (int c = 0; c < 3; ++c) {
      float& v = in[p * 3 + c];
      if (v > params.clip_max) {
        v = params.clip_max;
        clip = true;
      }
      if (!(texture[p * 3 + c] > 0.0f) || !(v > 0.0f) || !(wb[p * 3 + c] > 0.0f)) ok = false;
    }
    if (clip) ++clipped;
    valid[p] = ok && !clip;
    if (valid[p]) {
      for (int c = 0; c < 3; ++c) kernel[p * 3 + c] = wb[p * 3 + c] / in[p * 3 + c];
    }
  }
  s.input = LinearImage(w, h, std::move(in));
  s.wb_gt = std::move(wb);
  s.kernel_gt = WBKernel(w, h, std::move(kernel));
  s.mask = Mask({w, h}, std::move(valid));
  s.clip_rate = static_cast<double>(clipped) / static_cast<double>(n);
  return s;
}

LinearImage resize(const LinearImage& img, int width, int height) {
  if (img.width() == width && img.height() == height) return img;
  std::vector<float> out(static_cast<std::size_t>(width) * height * 3);
  const float sx = static_cast<float>(img.width()) / width, sy = static_cast<float>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const float fy = std::clamp((y + 0.5f) * sy - 0.5f, 0.0f, img.height() - 1.0f);
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, img.height() - 1);
    const float ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const float fx = std::clamp((x + 0.5f) * sx - 0.5f, 0.0f, img.width() - 1.0f);
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, img.width() - 1);
      const float tx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const float a = img.at(x0, y0, c), b = img.at(x1, y0, c), cc = img.at(x0, y1, c), d = img.at(x1, y1, c);
        out[(static_cast<std::size_t>(y) * width + x) * 3 + c] =
            (a + (b - a) * tx) * (1.0f - ty) + (cc + (d - cc) * tx) * ty;
      }
    }
  }
  return LinearImage(width, height, std::move(out));
}

namespace {

std::string sample_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf;
}

DatasetSummary build_impl(const SynthesisParams& params, const std::filesystem::path& out,
                          const std::function<TextTexture(std::size_t, Rng&)>& texture_for) {
  params.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out / "samples", ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + (out / "samples").string() + ": " + ec.message());

  const std::size_t total = static_cast<std::size_t>(params.train_samples) + params.val_samples;
  std::vector<ManifestEntry> entries(total);
  parallel_for(total, [&](std::size_t i) {
    Rng rng = Rng::derive(params.seed, i);
    TextTexture tex = texture_for(i, rng);
    Sample s = synth_sample(tex.image, params, rng);

    ManifestEntry& e = entries[i];
    e.id = sample_id(i);
    e.split = i < static_cast<std::size_t>(params.train_samples) ? "train" : "val";
    e.seed = splitmix64(params.seed ^ splitmix64(i));
    auto rel = [&](const char* suffix) { return "samples/" + e.id + "_" + suffix; };
    e.input = rel("input.pfm");
    e.wb_gt = rel("wb_gt.pfm");
    e.kernel_gt = rel("kernel_gt.pfm");
    e.texture = rel("texture.pfm");
    e.material_gt = rel("material_gt.pfm");
    e.shading_gt = rel("shading_gt.pfm");
    e.mask = rel("mask.png");
    e.lights = s.lights;
    e.mix_a = s.mix_a;
    e.clip_rate = s.clip_rate;
    e.text = tex.text;

    io::write_pfm(out / e.input, s.input);
    io::write_pfm(out / e.wb_gt, s.wb_gt);
    io::write_pfm(out / e.kernel_gt, s.kernel_gt);
    io::write_pfm(out / e.texture, s.texture);
    io::write_pfm(out / e.material_gt, s.material_gt);
    io::write_pfm(out / e.shading_gt, s.shading_gt);
    io::write_mask_png(out / e.mask, s.mask);
  });

  DatasetSummary summary;
  summary.manifest = out / "manifest.jsonl";
  write_manifest(summary.manifest, entries);
  summary.samples = total;
  summary.train = static_cast<std::size_t>(params.train_samples);
  summary.val = static_cast<std::size_t>(params.val_samples);
  return summary;
}

}  // namespace

DatasetSummary build_dataset(std::span<const LinearImage> textures, const SynthesisParams& params,
                             const std::filesystem::path& out) {
  if (textures.empty()) throw Error(Errc::EmptyTextureSet, "no textures supplied");
  std::vector<LinearImage> resized;
  resized.reserve(textures.size());
  for (const auto& t : textures) resized.push_back(resize(t, params.width, params.height));
  return build_impl(params, out, [&](std::size_t i, Rng&) { return TextTexture{resized[i % resized.size()], {}}; });
}

DatasetSummary build_procedural_dataset(const SynthesisParams& params, const std::filesystem::path& out) {
  return build_impl(params, out, [&](std::size_t, Rng& rng) { return gen_text_texture(rng, params); });
}

DatasetSummary build_dataset(const std::filesystem::path& texture_dir, const SynthesisParams& params,
                             const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(texture_dir, ec)) throw Error(Errc::IoError, "not a directory: " + texture_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(texture_dir)) {
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (entry.is_regular_file() && (ext == ".png" || ext == ".pfm")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<LinearImage> textures;
  for (const auto& f : files) {
    try {
      textures.push_back(io::read_image(f));
    } catch (const Error&) {
      // unreadable files are skipped; an empty result is reported below
    }
  }
  if (textures.empty()) throw Error(Errc::EmptyTextureSet, "no readable textures in " + texture_dir.string());
  return build_dataset(textures, params, out);
}

}  // namespace dociiw::synth
