#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dociiw/losses.hpp"

namespace dociiw::pipeline {

enum class WbSource { GroundTruth, Checkpoint };

struct TrainConfig {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  int epochs = 30;
  int batch = 8;
  float lr = 2e-3f;
  losses::LossWeights weights;
  std::uint64_t seed = 1;
  int val_interval = 1;
  int depth = 3;
  int width = 8;
  /// Stage two only: where the white-balanced input comes from.
  WbSource wb_source = WbSource::GroundTruth;
  std::filesystem::path wb_checkpoint;
  /// Continue from this checkpoint (network, optimizer, step and epoch).
  std::filesystem::path resume;
  int max_consecutive_nonfinite = 10;

  void validate() const;
};

struct Evaluation {
  int epoch = 0;
  std::uint64_t step = 0;
  losses::LossReport loss;                 // mean over the validation split
  std::map<std::string, double> metrics;   // validation-only diagnostics
};

struct TrainResult {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  std::vector<Evaluation> history;  // history.front() is the initialization
  std::uint64_t steps = 0;
  std::uint64_t skipped_steps = 0;
};

/// Stage one on ground-truth kernels and white-balanced images.
/// Diagnostics: angular_error (degrees, single-light samples).
TrainResult train_wbnet(const TrainConfig& cfg);

/// Stage two, self-supervised from I_wb and T. Material and shading ground
/// truth are loaded for validation diagnostics only and are forbidden on the
/// training tapes. Diagnostics: shading_consistency, chroma_r_vs_wb,
/// chroma_r_vs_gt, shading_error, material_error, reconstruction.
TrainResult train_smtnet(const TrainConfig& cfg);

}  // namespace dociiw::pipeline
