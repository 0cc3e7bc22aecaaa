#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "dociiw/checks.hpp"
#include "dociiw/config.hpp"
#include "dociiw/error.hpp"
#include "dociiw/image_io.hpp"
#include "dociiw/nn/checkpoint.hpp"
#include "dociiw/parallel.hpp"
#include "dociiw/pipeline/evaluate.hpp"
#include "dociiw/pipeline/infer.hpp"
#include "dociiw/pipeline/train.hpp"
#include "dociiw/synth.hpp"

namespace fs = std::filesystem;
using namespace dociiw;

namespace {

constexpr int kExitContract = 1;
constexpr int kExitUsage = 2;

// Flags shared by every subcommand; unset values leave the config alone.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  std::optional<std::string> ocr_cmd;
  std::optional<int> epochs;
  std::optional<float> lr;
  std::optional<int> batch;
  std::optional<int> size;
  std::optional<int> samples;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Config resolve(const Overrides& o) {
  Config cfg = o.config.empty() ? Config{} : load_config(o.config);
  if (o.seed) cfg.apply_seed(*o.seed);
  if (o.threads) cfg.threads = *o.threads;
  if (o.ocr_cmd) cfg.metrics.ocr_cmd = *o.ocr_cmd;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.lr) cfg.train.lr = *o.lr;
  if (o.batch) cfg.train.batch = *o.batch;
  if (o.size) cfg.synth.width = cfg.synth.height = *o.size;
  if (o.samples) cfg.synth.train_samples = *o.samples;
  if (!o.out.empty()) cfg.train.out_dir = o.out;

  if (cfg.threads <= 0) {
    if (const char* env = std::getenv("DOCIIW_THREADS")) cfg.threads = std::atoi(env);
  }
  if (cfg.threads > 0) set_thread_count(cfg.threads);
  cfg.threads = thread_count();
  return cfg;
}

fs::path require_out(const Overrides& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  fs::create_directories(o.out);
  return o.out;
}

void log_config(const Config& cfg, const fs::path& out) {
  const std::string text = to_json(cfg);
  std::cerr << "resolved config:\n" << text << "\n";
  if (!out.empty()) std::ofstream(out / "config.json") << text << "\n";
}

void print_history(const pipeline::TrainResult& r) {
  for (const auto& e : r.history) {
    std::cout << "epoch " << e.epoch << " val total " << e.loss.total;
    for (const auto& [k, v] : e.metrics) std::cout << ' ' << k << ' ' << v;
    std::cout << "\n";
  }
  std::cout << "checkpoint " << r.checkpoint.string() << "\nlog " << r.log.string() << "\n";
  if (r.skipped_steps) std::cout << "skipped non-finite steps " << r.skipped_steps << "\n";
}

pipeline::Model load_model(const fs::path& path, std::size_t heads, const char* what) {
  auto ckpt = nn::load_checkpoint(path);
  if (ckpt.config.heads.size() != heads) {
    throw Error(Errc::CheckpointMismatch, path.string() + " is not a " + what + " checkpoint");
  }
  return pipeline::Model::from_checkpoint(ckpt);
}

int report_checks(const std::vector<checks::CheckResult>& results) {
  for (const auto& r : results) std::cout << checks::format(r) << "\n";
  const bool ok = checks::all_passed(results);
  std::cout << (ok ? "all checks passed" : "CHECK FAILURES") << "\n";
  return ok ? 0 : kExitContract;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Document reflectance estimation: synthesis, training, inference and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides ov;
  app.add_option("--config", ov.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", ov.seed, "Master seed");
  app.add_option("--out", ov.out, "Output directory");
  app.add_option("--threads", ov.threads, "Worker cap (falls back to DOCIIW_THREADS)")->check(CLI::PositiveNumber);
  app.add_option("--ocr-cmd", ov.ocr_cmd, "OCR command template containing {input}");
  app.add_option("--epochs", ov.epochs, "Training epochs");
  app.add_option("--lr", ov.lr, "Adam learning rate");
  app.add_option("--batch", ov.batch, "Minibatch size");
  app.add_option("--size", ov.size, "Synthesized image side length");
  app.add_option("--samples", ov.samples, "Number of training samples to synthesize");

  auto* synth = app.add_subcommand("synth", "Build a synthetic dataset and manifest");
  std::string textures;
  synth->add_option("--textures", textures, "Directory of texture images (default: procedural text)")
      ->check(CLI::ExistingDirectory);

  auto* train_wb = app.add_subcommand("train-wb", "Train the white-balance network");
  auto* train_smt = app.add_subcommand("train-smt", "Train the shading/material network");
  std::string manifest, resume, wb_ckpt_for_train;
  for (auto* sc : {train_wb, train_smt}) {
    sc->add_option("--manifest", manifest, "Dataset manifest")->check(CLI::ExistingFile);
    sc->add_option("--resume", resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  }
  train_smt->add_option("--wb-checkpoint", wb_ckpt_for_train, "Chain on a trained WBNet instead of ground truth")
      ->check(CLI::ExistingFile);

  auto* infer = app.add_subcommand("infer", "Decompose images with trained networks");
  std::vector<std::string> inputs;
  std::string wb_ckpt, smt_ckpt, texture;
  infer->add_option("inputs", inputs, "Input images (.png or .pfm)")->required()->check(CLI::ExistingFile);
  infer->add_option("--texture", texture, "Known texture (single input only)")->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "Score a manifest's validation split or image pairs");
  std::vector<std::string> pairs;
  std::size_t limit = 0;
  eval->add_option("--manifest", manifest, "Dataset manifest")->check(CLI::ExistingFile);
  eval->add_option("--pair", pairs, "candidate=reference image pair (repeatable)");
  eval->add_option("--limit", limit, "Maximum records to score (0: all)");

  for (auto* sc : {infer, eval}) {
    sc->add_option("--wb", wb_ckpt, "WBNet checkpoint")->check(CLI::ExistingFile);
    sc->add_option("--smt", smt_ckpt, "SMTNet checkpoint")->check(CLI::ExistingFile);
  }

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  auto* selftest = app.add_subcommand("selftest", "Round-trip, chromaticity and oracle identity suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      const fs::path out = require_out(ov);
      Config cfg = resolve(ov);
      cfg.validate();
      log_config(cfg, out);
      const auto s = textures.empty() ? synth::build_procedural_dataset(cfg.synth, out)
                                      : synth::build_dataset(fs::path(textures), cfg.synth, out);
      std::cout << "wrote " << s.samples << " samples (" << s.train << " train, " << s.val << " val) to "
                << s.manifest.string() << "\n";
      return 0;
    }

    if (train_wb->parsed() || train_smt->parsed()) {
      const fs::path out = require_out(ov);
      Config cfg = resolve(ov);
      if (!manifest.empty()) cfg.train.manifest = manifest;
      if (cfg.train.manifest.empty()) throw UsageError("--manifest is required (or train.manifest in --config)");
      if (!resume.empty()) cfg.train.resume = resume;
      if (!wb_ckpt_for_train.empty()) {
        cfg.train.wb_source = pipeline::WbSource::Checkpoint;
        cfg.train.wb_checkpoint = wb_ckpt_for_train;
      }
      cfg.validate();
      log_config(cfg, out);
      print_history(train_wb->parsed() ? pipeline::train_wbnet(cfg.train) : pipeline::train_smtnet(cfg.train));
      return 0;
    }

    if (infer->parsed()) {
      const fs::path out = require_out(ov);
      if (wb_ckpt.empty() || smt_ckpt.empty()) throw UsageError("--wb and --smt are required");
      if (!texture.empty() && inputs.size() != 1) throw UsageError("--texture needs exactly one input");
      Config cfg = resolve(ov);
      log_config(cfg, out);
      const auto wb = load_model(wb_ckpt, 1, "WBNet");
      const auto smt = load_model(smt_ckpt, 2, "SMTNet");
      std::optional<LinearImage> tex;
      if (!texture.empty()) tex = io::read_image(texture, cfg.srgb_decode);
      std::map<std::string, int> seen;
      for (const auto& in : inputs) {
        const LinearImage img = io::read_image(in, cfg.srgb_decode);
        std::string stem = fs::path(in).stem().string();
        if (int n = seen[stem]++; n > 0) stem += "_" + std::to_string(n);
        const auto d = pipeline::infer(img, wb, smt, tex ? &*tex : nullptr);
        pipeline::save_decomposition(out / stem, img, d);
        std::cout << in << " -> " << (out / stem).string() << "\n";
      }
      return 0;
    }

    if (eval->parsed()) {
      const fs::path out = require_out(ov);
      if (manifest.empty() == pairs.empty()) throw UsageError("give either --manifest or --pair");
      Config cfg = resolve(ov);
      cfg.validate();
      log_config(cfg, out);
      metrics::MetricReport report;
      if (!manifest.empty()) {
        if (wb_ckpt.empty() || smt_ckpt.empty()) throw UsageError("--manifest needs --wb and --smt");
        pipeline::EvalOptions opts;
        opts.metrics = cfg.metrics;
        opts.work_dir = out / "ocr";
        opts.limit = limit;
        const auto r = pipeline::evaluate_manifest(manifest, load_model(wb_ckpt, 1, "WBNet"),
                                                   load_model(smt_ckpt, 2, "SMTNet"), opts);
        std::cout << "ocr " << metrics::to_string(r.ocr);
        if (!r.ocr_message.empty()) std::cout << " (" << r.ocr_message << ")";
        std::cout << "\n";
        report = r.report;
      } else {
        std::vector<std::pair<fs::path, fs::path>> list;
        for (const auto& p : pairs) {
          const auto eq = p.find('=');
          if (eq == std::string::npos) throw UsageError("--pair expects candidate=reference, got " + p);
          list.emplace_back(p.substr(0, eq), p.substr(eq + 1));
        }
        report = pipeline::evaluate_pairs(list, cfg.metrics, cfg.srgb_decode);
      }
      std::ofstream(out / "report.json") << report.to_json() << "\n";
      std::ofstream(out / "report.txt") << report.to_table();
      std::cout << report.to_table();
      return 0;
    }

    if (gradcheck->parsed()) {
      Config cfg = resolve(ov);
      log_config(cfg, {});
      return report_checks(checks::gradient_suite(cfg.seed));
    }

    if (selftest->parsed()) {
      Config cfg = resolve(ov);
      fs::path scratch = ov.out;
      const bool temporary = scratch.empty();
      if (temporary) scratch = fs::temp_directory_path() / ("dociiw-selftest-" + std::to_string(::getpid()));
      fs::create_directories(scratch);
      log_config(cfg, temporary ? fs::path{} : scratch);
      const int rc = report_checks(checks::selftest(cfg.seed, scratch));
      if (temporary) fs::remove_all(scratch);
      return rc;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitContract;
  }
  return kExitUsage;
}
