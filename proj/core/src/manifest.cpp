#include "dociiw/manifest.hpp"

#include <fstream>

#include "dociiw/error.hpp"
#include "json.hpp"

namespace dociiw::synth {

using nlohmann::json;

std::string to_json_line(const ManifestEntry& e) {
  json lights = json::array();
  for (const auto& l : e.lights) {
    lights.push_back({{"cct", l.cct}, {"rgb", {l.rgb[0], l.rgb[1], l.rgb[2]}}, {"eta", l.eta}});
  }
  json j = {
      {"id", e.id},
      {"split", e.split},
      {"seed", e.seed},
      {"input", e.input},
      {"wb_gt", e.wb_gt},
      {"kernel_gt", e.kernel_gt},
      {"texture", e.texture},
      {"material_gt", e.material_gt},
      {"shading_gt", e.shading_gt},
      {"mask", e.mask},
      {"lights", lights},
      {"mix_a", e.mix_a ? json(*e.mix_a) : json(nullptr)},
      {"clip_rate", e.clip_rate},
  };
  if (!e.text.empty()) j["text"] = e.text;
  return j.dump();
}

ManifestEntry parse_manifest_line(const std::string& line) {
  ManifestEntry e;
  try {
    const json j = json::parse(line);
    e.id = j.at("id").get<std::string>();
    e.split = j.value("split", std::string("train"));
    e.seed = j.value("seed", std::uint64_t{0});
    e.input = j.at("input").get<std::string>();
    e.wb_gt = j.at("wb_gt").get<std::string>();
    e.kernel_gt = j.at("kernel_gt").get<std::string>();
    e.texture = j.at("texture").get<std::string>();
    e.material_gt = j.value("material_gt", std::string());
    e.shading_gt = j.value("shading_gt", std::string());
    e.mask = j.at("mask").get<std::string>();
    for (const auto& l : j.at("lights")) {
      SampleLight sl;
      sl.cct = l.at("cct").get<double>();
      const auto& rgb = l.at("rgb");
      sl.rgb = {rgb.at(0).get<float>(), rgb.at(1).get<float>(), rgb.at(2).get<float>()};
      sl.eta = l.at("eta").get<float>();
      e.lights.push_back(sl);
    }
    if (j.contains("mix_a") && !j["mix_a"].is_null()) e.mix_a = j["mix_a"].get<float>();
    e.clip_rate = j.value("clip_rate", 0.0);
    e.text = j.value("text", std::string());
  } catch (const json::exception& ex) {
    throw Error(Errc::IoError, std::string("malformed manifest line: ") + ex.what());
  }
  return e;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    entries.push_back(parse_manifest_line(line));
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write manifest " + path.string());
  for (const auto& e : entries) out << to_json_line(e) << '\n';
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

}  // namespace dociiw::synth
