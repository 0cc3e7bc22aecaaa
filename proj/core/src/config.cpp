#include "dociiw/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "dociiw/error.hpp"
#include "json.hpp"

namespace dociiw {

using nlohmann::json;

void Config::apply_seed(std::uint64_t s) {
  seed = s;
  synth.seed = s;
  train.seed = s;
}

void Config::validate() const {
  synth.validate();
  train.weights.validate();
  if (threads < 0) throw Error(Errc::InvalidArgument, "config: threads must be >= 0");
  if (metrics.ocr_timeout_ms < 1) throw Error(Errc::InvalidArgument, "config: ocr_timeout_ms must be >= 1");
  if (metrics.ld_block < 2 || metrics.ld_search < 0) {
    throw Error(Errc::InvalidArgument, "config: ld_block >= 2 and ld_search >= 0 required");
  }
  if (metrics.ms_ssim_levels < 0 || metrics.ms_ssim_levels > 5) {
    throw Error(Errc::InvalidArgument, "config: ms_ssim_levels must lie in [0, 5]");
  }
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "config: " + where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw Error(Errc::UnknownConfigKey, "config: unknown key '" + where + k + "'");
  }
}

template <class T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void get_rgb(const json& j, const char* key, Rgb& out) {
  if (!j.contains(key)) return;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw Error(Errc::InvalidArgument, std::string("config: ") + key + " needs 3 values");
  for (int c = 0; c < 3; ++c) out[c] = a.at(c).get<float>();
}

json rgb(const Rgb& c) { return json::array({c[0], c[1], c[2]}); }

}  // namespace

Config parse_config(std::string_view text) {
  Config cfg;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("config: malformed JSON: ") + e.what());
  }
  try {
    reject_unknown(j, {"synth", "train", "metrics", "seed", "threads", "srgb_decode"}, "");
    if (j.contains("seed")) cfg.apply_seed(j.at("seed").get<std::uint64_t>());
    get(j, "threads", cfg.threads);
    get(j, "srgb_decode", cfg.srgb_decode);

    if (j.contains("synth")) {
      const json& s = j.at("synth");
      reject_unknown(s,
                     {"width", "height", "shading_octaves", "shading_gradient", "shading_lo", "shading_hi", "tint_lo",
                      "tint_hi", "tint_variation", "cct_lo", "cct_hi", "two_light_probability", "text_density",
                      "glyph_scale", "clip_max", "train_samples", "val_samples", "seed"},
                     "synth.");
      auto& p = cfg.synth;
      get(s, "width", p.width);
      get(s, "height", p.height);
      get(s, "shading_octaves", p.shading_octaves);
      get(s, "shading_gradient", p.shading_gradient);
      get(s, "shading_lo", p.shading_lo);
      get(s, "shading_hi", p.shading_hi);
      get_rgb(s, "tint_lo", p.tint_lo);
      get_rgb(s, "tint_hi", p.tint_hi);
      get(s, "tint_variation", p.tint_variation);
      get(s, "cct_lo", p.cct_lo);
      get(s, "cct_hi", p.cct_hi);
      get(s, "two_light_probability", p.two_light_probability);
      get(s, "text_density", p.text_density);
      get(s, "glyph_scale", p.glyph_scale);
      get(s, "clip_max", p.clip_max);
      get(s, "train_samples", p.train_samples);
      get(s, "val_samples", p.val_samples);
      get(s, "seed", p.seed);
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      reject_unknown(t,
                     {"manifest", "out_dir", "epochs", "batch", "lr", "weights", "seed", "val_interval", "depth",
                      "width", "wb_source", "wb_checkpoint", "resume", "max_consecutive_nonfinite"},
                     "train.");
      auto& c = cfg.train;
      if (t.contains("manifest")) c.manifest = t.at("manifest").get<std::string>();
      if (t.contains("out_dir")) c.out_dir = t.at("out_dir").get<std::string>();
      if (t.contains("wb_checkpoint")) c.wb_checkpoint = t.at("wb_checkpoint").get<std::string>();
      if (t.contains("resume")) c.resume = t.at("resume").get<std::string>();
      get(t, "epochs", c.epochs);
      get(t, "batch", c.batch);
      get(t, "lr", c.lr);
      get(t, "seed", c.seed);
      get(t, "val_interval", c.val_interval);
      get(t, "depth", c.depth);
      get(t, "width", c.width);
      get(t, "max_consecutive_nonfinite", c.max_consecutive_nonfinite);
      if (t.contains("wb_source")) {
        const auto src = t.at("wb_source").get<std::string>();
        if (src == "ground_truth") {
          c.wb_source = pipeline::WbSource::GroundTruth;
        } else if (src == "checkpoint") {
          c.wb_source = pipeline::WbSource::Checkpoint;
        } else {
          throw Error(Errc::InvalidArgument, "config: wb_source must be ground_truth or checkpoint");
        }
      }
      if (t.contains("weights")) {
        const json& w = t.at("weights");
        reject_unknown(w, {"alpha1", "alpha2", "beta1", "beta2", "beta3", "beta4"}, "train.weights.");
        get(w, "alpha1", c.weights.alpha1);
        get(w, "alpha2", c.weights.alpha2);
        get(w, "beta1", c.weights.beta1);
        get(w, "beta2", c.weights.beta2);
        get(w, "beta3", c.weights.beta3);
        get(w, "beta4", c.weights.beta4);
      }
    }
    if (j.contains("metrics")) {
      const json& m = j.at("metrics");
      reject_unknown(m, {"ocr_cmd", "ocr_timeout_ms", "ld_block", "ld_search", "ms_ssim_levels"}, "metrics.");
      get(m, "ocr_cmd", cfg.metrics.ocr_cmd);
      get(m, "ocr_timeout_ms", cfg.metrics.ocr_timeout_ms);
      get(m, "ld_block", cfg.metrics.ld_block);
      get(m, "ld_search", cfg.metrics.ld_search);
      get(m, "ms_ssim_levels", cfg.metrics.ms_ssim_levels);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("config: wrong value type: ") + e.what());
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const Config& cfg) {
  const auto& p = cfg.synth;
  const auto& t = cfg.train;
  json j = {
      {"seed", cfg.seed},
      {"threads", cfg.threads},
      {"srgb_decode", cfg.srgb_decode},
      {"synth",
       {{"width", p.width},
        {"height", p.height},
        {"shading_octaves", p.shading_octaves},
        {"shading_gradient", p.shading_gradient},
        {"shading_lo", p.shading_lo},
        {"shading_hi", p.shading_hi},
        {"tint_lo", rgb(p.tint_lo)},
        {"tint_hi", rgb(p.tint_hi)},
        {"tint_variation", p.tint_variation},
        {"cct_lo", p.cct_lo},
        {"cct_hi", p.cct_hi},
        {"two_light_probability", p.two_light_probability},
        {"text_density", p.text_density},
        {"glyph_scale", p.glyph_scale},
        {"clip_max", p.clip_max},
        {"train_samples", p.train_samples},
        {"val_samples", p.val_samples},
        {"seed", p.seed}}},
      {"train",
       {{"manifest", t.manifest.string()},
        {"out_dir", t.out_dir.string()},
        {"epochs", t.epochs},
        {"batch", t.batch},
        {"lr", t.lr},
        {"weights",
         {{"alpha1", t.weights.alpha1},
          {"alpha2", t.weights.alpha2},
          {"beta1", t.weights.beta1},
          {"beta2", t.weights.beta2},
          {"beta3", t.weights.beta3},
          {"beta4", t.weights.beta4}}},
        {"seed", t.seed},
        {"val_interval", t.val_interval},
        {"depth", t.depth},
        {"width", t.width},
        {"wb_source", t.wb_source == pipeline::WbSource::GroundTruth ? "ground_truth" : "checkpoint"},
        {"wb_checkpoint", t.wb_checkpoint.string()},
        {"resume", t.resume.string()},
        {"max_consecutive_nonfinite", t.max_consecutive_nonfinite}}},
      {"metrics",
       {{"ocr_cmd", cfg.metrics.ocr_cmd},
        {"ocr_timeout_ms", cfg.metrics.ocr_timeout_ms},
        {"ld_block", cfg.metrics.ld_block},
        {"ld_search", cfg.metrics.ld_search},
        {"ms_ssim_levels", cfg.metrics.ms_ssim_levels}}},
  };
  return j.dump(2);
}

}  // namespace dociiw
