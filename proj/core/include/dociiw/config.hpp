#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "dociiw/metrics.hpp"
#include "dociiw/pipeline/train.hpp"
#include "dociiw/synth.hpp"

namespace dociiw {

using metrics::MetricOptions;

/// Everything a subcommand can be configured with. The JSON form has the
/// sections "synth", "train", "metrics" plus top-level "seed", "threads",
/// "srgb_decode"; unknown keys are rejected with UnknownConfigKey.
struct Config {
  synth::SynthesisParams synth;
  pipeline::TrainConfig train;
  MetricOptions metrics;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: DOCIIW_THREADS or all cores
  bool srgb_decode = true;

  /// Copies the master seed into the synthesis and training sections.
  void apply_seed(std::uint64_t s);
  void validate() const;
};

Config parse_config(std::string_view json_text);
Config load_config(const std::filesystem::path& path);
/// Fully resolved configuration as pretty-printed JSON.
std::string to_json(const Config& cfg);

}  // namespace dociiw
