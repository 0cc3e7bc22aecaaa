#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "dociiw/nn/adam.hpp"
#include "dociiw/nn/unet.hpp"

namespace dociiw::nn {

// Binary layout, all integers and floats little-endian:
//
//   "DIIWCKPT" u32 version
//   u32 in_channels, depth, width, kernel, head_count
//     per head: u32 channels, u32 activation, u32 name_len, name bytes
//   u64 step, u64 epoch, u64 seed
//   u32 param_count
//     per param: u32 name_len, name, u32 rank, u32 dims[rank], f32 values[]
//   u8 has_optimizer
//     if set: u64 t, then per param f32 m[], f32 v[]
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  NetConfig config;
  ParamSet params;
  std::optional<AdamState> optimizer;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  std::uint64_t seed = 0;
};

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt);
Checkpoint deserialize(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Loads and verifies the stored network layout equals `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const NetConfig& expected);

}  // namespace dociiw::nn
