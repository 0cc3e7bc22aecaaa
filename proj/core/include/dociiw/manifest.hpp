#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dociiw/synth.hpp"

namespace dociiw::synth {

/// One JSON-lines record of a dataset manifest. Paths are stored relative to
/// the manifest file; resolve() makes them usable.
struct ManifestEntry {
  std::string id;
  std::string split;  // "train" or "val"
  std::uint64_t seed = 0;
  std::string input;
  std::string wb_gt;
  std::string kernel_gt;
  std::string texture;
  std::string material_gt;
  std::string shading_gt;
  std::string mask;
  std::vector<SampleLight> lights;
  std::optional<float> mix_a;
  double clip_rate = 0.0;
  std::string text;

  bool single_light() const noexcept { return lights.size() == 1; }
};

std::string to_json_line(const ManifestEntry& entry);
ManifestEntry parse_manifest_line(const std::string& line);

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

}  // namespace dociiw::synth
