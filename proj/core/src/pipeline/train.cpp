#include "dociiw/pipeline/train.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>

#include "dociiw/ad/ops.hpp"
#include "dociiw/error.hpp"
#include "dociiw/metrics.hpp"
#include "dociiw/nn/checkpoint.hpp"
#include "dociiw/parallel.hpp"
#include "dociiw/pipeline/dataset.hpp"
#include "dociiw/pipeline/infer.hpp"
#include "dociiw/rng.hpp"
#include "json.hpp"

namespace dociiw::pipeline {

using ad::Tape;
using ad::Tensor;
using ad::Var;

void TrainConfig::validate() const {
  if (manifest.empty()) throw Error(Errc::InvalidArgument, "train: manifest path is required");
  if (out_dir.empty()) throw Error(Errc::InvalidArgument, "train: output directory is required");
  if (epochs < 0) throw Error(Errc::InvalidArgument, "train: epochs must be >= 0");
  if (batch < 1) throw Error(Errc::InvalidArgument, "train: batch size must be >= 1");
  if (!(lr >= 0.0f) || !std::isfinite(lr)) throw Error(Errc::InvalidArgument, "train: learning rate must be >= 0");
  if (val_interval < 1) throw Error(Errc::InvalidArgument, "train: validation interval must be >= 1");
  if (max_consecutive_nonfinite < 1) throw Error(Errc::InvalidArgument, "train: non-finite budget must be >= 1");
  if (wb_source == WbSource::Checkpoint && wb_checkpoint.empty()) {
    throw Error(Errc::InvalidArgument, "train: chained mode needs a white-balance checkpoint");
  }
  weights.validate();
}

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ull;

struct Stage {
  std::string name;
  nn::NetConfig net;
  std::size_t train_size = 0;
  std::vector<std::string> forbidden;
  // Builds the training loss of item `i` on `tape` from bound parameters.
  std::function<losses::Loss(Tape& tape, std::span<const Var> params, std::size_t i)> train_loss;
  // Validation pass with frozen parameters.
  std::function<Evaluation(const nn::ParamSet& params)> evaluate;
};

nlohmann::json record(std::uint64_t step, int epoch, const char* split, const losses::LossReport& r) {
  nlohmann::json j;
  j["step"] = step;
  j["epoch"] = epoch;
  j["split"] = split;
  j["total"] = r.total;
  for (const auto& t : r.terms) j[t.name] = t.value;
  return j;
}

losses::LossReport mean_report(const std::vector<losses::LossReport>& reports) {
  losses::LossReport m;
  if (reports.empty()) return m;
  m.terms = reports.front().terms;
  for (auto& t : m.terms) t.value = 0.0;
  for (const auto& r : reports) {
    m.total += r.total;
    for (std::size_t k = 0; k < m.terms.size(); ++k) m.terms[k].value += r.terms[k].value;
  }
  const double n = static_cast<double>(reports.size());
  m.total /= n;
  for (auto& t : m.terms) t.value /= n;
  return m;
}

TrainResult run(const TrainConfig& cfg, const Stage& st) {
  if (static_cast<std::size_t>(cfg.batch) > st.train_size) {
    throw Error(Errc::InvalidArgument, "train: batch size " + std::to_string(cfg.batch) + " exceeds the " +
                                           std::to_string(st.train_size) + " training samples");
  }
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir / "checkpoints", ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + cfg.out_dir.string() + ": " + ec.message());

  const nn::UNet net(st.net);
  nn::ParamSet params = net.init(cfg.seed);
  nn::AdamState state = nn::AdamState::zeros_like(params);
  std::uint64_t step = 0;
  int start_epoch = 0;
  const bool resuming = !cfg.resume.empty();
  if (resuming) {
    nn::Checkpoint ck = nn::load_checkpoint(cfg.resume, st.net);
    params = std::move(ck.params);
    state = ck.optimizer ? std::move(*ck.optimizer) : nn::AdamState::zeros_like(params);
    step = ck.step;
    start_epoch = static_cast<int>(ck.epoch);
  }

  TrainResult res;
  res.log = cfg.out_dir / (st.name + ".log.jsonl");
  res.checkpoint = cfg.out_dir / (st.name + ".ckpt");
  std::ofstream log(res.log, resuming ? std::ios::app : std::ios::trunc);
  if (!log) throw Error(Errc::IoError, "cannot open log " + res.log.string());

  auto validate_and_log = [&](int epoch) {
    Evaluation ev = st.evaluate(params);
    ev.epoch = epoch;
    ev.step = step;
    nlohmann::json j = record(step, epoch, "val", ev.loss);
    for (const auto& [k, v] : ev.metrics) j[k] = v;
    log << j.dump() << '\n';
    log.flush();
    res.history.push_back(std::move(ev));
  };
  auto save = [&](int epoch, const std::filesystem::path& path) {
    nn::Checkpoint ck{st.net, params, state, step, static_cast<std::uint64_t>(epoch), cfg.seed};
    nn::save_checkpoint(path, ck);
  };

  validate_and_log(start_epoch);

  const nn::AdamConfig adam{cfg.lr};
  const std::size_t np = params.size();
  int consecutive_bad = 0;
  for (int epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(st.train_size);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = Rng::derive(cfg.seed ^ kShuffleStream, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t bsz = std::min(order.size() - b, static_cast<std::size_t>(cfg.batch));
      std::vector<std::vector<std::vector<float>>> grads(bsz);
      std::vector<losses::LossReport> reports(bsz);
      std::vector<std::uint8_t> bad(bsz, 0);
      parallel_for(bsz, [&](std::size_t k) {
        Tape tape;
        for (const auto& label : st.forbidden) tape.forbid(label);
        const auto vars = net.bind(tape, params);
        const losses::Loss loss = st.train_loss(tape, vars, order[b + k]);
        reports[k] = loss.report();
        try {
          tape.backward(loss.total);
        } catch (const Error& e) {
          if (e.code() != Errc::NonFiniteDetected) throw;
          bad[k] = 1;
          return;
        }
        grads[k].resize(np);
        for (std::size_t p = 0; p < np; ++p) grads[k][p] = vars[p].grad();
      });
      ++step;

      bool skip = std::find(bad.begin(), bad.end(), 1) != bad.end();
      std::vector<std::vector<float>> total(np);
      if (!skip) {
        const float inv = 1.0f / static_cast<float>(bsz);
        for (std::size_t p = 0; p < np; ++p) {
          total[p].assign(params[p].value.numel(), 0.0f);
          for (std::size_t k = 0; k < bsz; ++k) {
            for (std::size_t e = 0; e < total[p].size(); ++e) total[p][e] += grads[k][p][e];
          }
          for (float& g : total[p]) g *= inv;
        }
        try {
          nn::adam_step(params, total, state, adam);
        } catch (const Error& e) {
          if (e.code() != Errc::NonFiniteDetected) throw;
          skip = true;
        }
      }
      if (skip) {
        ++res.skipped_steps;
        nlohmann::json j{{"step", step}, {"epoch", epoch}, {"split", "train"}, {"skipped", true}};
        log << j.dump() << '\n';
        if (++consecutive_bad >= cfg.max_consecutive_nonfinite) {
          log.flush();
          throw Error(Errc::NonFiniteDetected, "train: " + std::to_string(consecutive_bad) +
                                                   " consecutive non-finite steps, aborting");
        }
        continue;
      }
      consecutive_bad = 0;
      log << record(step, epoch, "train", mean_report(reports)).dump() << '\n';
    }

    if (epoch % cfg.val_interval == 0 || epoch == cfg.epochs) {
      validate_and_log(epoch);
      char name[32];
      std::snprintf(name, sizeof name, "_e%03d.ckpt", epoch);
      save(epoch, cfg.out_dir / "checkpoints" / (st.name + name));
    }
  }
  save(std::max(cfg.epochs, start_epoch), res.checkpoint);
  res.steps = step;
  if (!log) throw Error(Errc::IoError, "short write to " + res.log.string());
  return res;
}

// Mean |a - b| over pixels set in `mask`, all channels.
double masked_mean_abs(const Tensor& a, const Tensor& b, const Tensor& mask) {
  const int c = a.shape.c(), h = a.shape.h(), w = a.shape.w();
  double s = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(0, y, x) == 0.0f) continue;
      for (int k = 0; k < c; ++k) s += std::abs(static_cast<double>(a.at(k, y, x)) - b.at(k, y, x));
      n += static_cast<std::size_t>(c);
    }
  }
  return n == 0 ? 0.0 : s / static_cast<double>(n);
}

double mean_abs(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += std::abs(static_cast<double>(a[i]) - b[i]);
  return s / static_cast<double>(a.numel());
}

Tensor chroma(const Tensor& t) {
  Tensor out = t;
  const int h = t.shape.h(), w = t.shape.w();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float s = std::max(t.at(0, y, x) + t.at(1, y, x) + t.at(2, y, x), kChromaEps);
      for (int k = 0; k < 3; ++k) out.at(k, y, x) = t.at(k, y, x) / s;
    }
  }
  return out;
}

Tensor multiply(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b[i];
  return out;
}

losses::WbnTargets targets_of(const Item& it) { return {it.input, it.kernel_gt, it.wb_gt, it.mask}; }

// Per-item validation values, reduced in index order.
struct ValItem {
  losses::LossReport loss;
  std::map<std::string, double> metrics;
};

Evaluation reduce(std::vector<ValItem>& items) {
  Evaluation ev;
  std::vector<losses::LossReport> reports;
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& v : items) {
    reports.push_back(v.loss);
    for (const auto& [k, x] : v.metrics) {
      acc[k].first += x;
      acc[k].second += 1;
    }
  }
  ev.loss = mean_report(reports);
  for (const auto& [k, sn] : acc) ev.metrics[k] = sn.first / static_cast<double>(sn.second);
  return ev;
}

}  // namespace

TrainResult train_wbnet(const TrainConfig& cfg) {
  cfg.validate();
  const Dataset ds = load_dataset(cfg.manifest, false);
  if (ds.val.empty()) throw Error(Errc::InvalidArgument, "train: manifest has no validation samples");

  Stage st;
  st.name = "wbnet";
  st.net = nn::NetConfig::wbnet(cfg.depth, cfg.width);
  st.train_size = ds.train.size();
  const nn::UNet net(st.net);
  st.train_loss = [&](Tape& tape, std::span<const Var> params, std::size_t i) {
    const Item& it = ds.train[i];
    const Var input = tape.constant(it.input, "input");
    const Var wb_hat = net.forward(params, input).at(0);
    return losses::wbn_objective(wb_hat, targets_of(it), cfg.weights);
  };
  st.evaluate = [&](const nn::ParamSet& params) {
    const Model model(st.net, params);
    std::vector<ValItem> out(ds.val.size());
    parallel_for(ds.val.size(), [&](std::size_t i) {
      const Item& it = ds.val[i];
      Tape tape;
      const Tensor kernel = model.run(it.input).at(0);
      out[i].loss = losses::wbn_objective(tape.constant(kernel), targets_of(it), cfg.weights).report();
      if (it.lights.size() == 1) {
        // I = l * I_wb, so the per-channel ratio of sums recovers the light.
        const int h = it.input.shape.h(), w = it.input.shape.w();
        double num[3] = {0, 0, 0}, den[3] = {0, 0, 0};
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            if (it.mask.at(0, y, x) == 0.0f) continue;
            for (int c = 0; c < 3; ++c) {
              num[c] += it.input.at(c, y, x);
              den[c] += static_cast<double>(kernel.at(c, y, x)) * it.input.at(c, y, x);
            }
          }
        }
        Rgb est{};
        for (int c = 0; c < 3; ++c) est[c] = static_cast<float>(num[c] / std::max(den[c], 1e-12));
        out[i].metrics["angular_error"] = metrics::angular_error(est, it.lights[0].rgb);
      }
    });
    return reduce(out);
  };
  return run(cfg, st);
}

TrainResult train_smtnet(const TrainConfig& cfg) {
  cfg.validate();
  const Dataset ds = load_dataset(cfg.manifest, true);
  if (ds.val.empty()) throw Error(Errc::InvalidArgument, "train: manifest has no validation samples");

  // White-balanced inputs: ground truth, or a frozen stage-one network.
  std::vector<Tensor> wb_train(ds.train.size()), wb_val(ds.val.size());
  if (cfg.wb_source == WbSource::GroundTruth) {
    for (std::size_t i = 0; i < ds.train.size(); ++i) wb_train[i] = ds.train[i].wb_gt;
    for (std::size_t i = 0; i < ds.val.size(); ++i) wb_val[i] = ds.val[i].wb_gt;
  } else {
    const Model wb = Model::load(cfg.wb_checkpoint, nn::NetConfig::wbnet(cfg.depth, cfg.width));
    parallel_for(ds.train.size(), [&](std::size_t i) {
      wb_train[i] = multiply(wb.run(ds.train[i].input).at(0), ds.train[i].input);
    });
    parallel_for(ds.val.size(), [&](std::size_t i) {
      wb_val[i] = multiply(wb.run(ds.val[i].input).at(0), ds.val[i].input);
    });
  }

  Stage st;
  st.name = "smtnet";
  st.net = nn::NetConfig::smtnet(cfg.depth, cfg.width);
  st.train_size = ds.train.size();
  st.forbidden = {"material_gt", "shading_gt"};
  const nn::UNet net(st.net);
  st.train_loss = [&](Tape& tape, std::span<const Var> params, std::size_t i) {
    const Var wb_input = tape.constant(wb_train[i], "wb_input");
    const Var texture = tape.constant(ds.train[i].texture, "texture");
    const auto heads = net.forward(params, wb_input);
    return losses::smt_objective(heads.at(0), heads.at(1), wb_input, texture, cfg.weights);
  };
  st.evaluate = [&](const nn::ParamSet& params) {
    const Model model(st.net, params);
    std::vector<ValItem> out(ds.val.size());
    parallel_for(ds.val.size(), [&](std::size_t i) {
      const Item& it = ds.val[i];
      const Withheld& gt = ds.val_withheld[i];
      const auto heads = model.run(wb_val[i]);
      Tape tape;
      const Var wb_input = tape.constant(wb_val[i], "wb_input");
      losses::SmtIntermediates mid;
      out[i].loss = losses::smt_objective(tape.constant(heads[0]), tape.constant(heads[1]), wb_input,
                                          tape.constant(it.texture, "texture"), cfg.weights, &mid)
                        .report();
      const Tensor& reflectance = mid.reflectance.value();
      auto& m = out[i].metrics;
      m["shading_consistency"] = mean_abs(heads[1], mid.shading_estimate.value());
      m["chroma_r_vs_wb"] = masked_mean_abs(chroma(reflectance), chroma(wb_val[i]), it.mask);
      m["chroma_r_vs_gt"] = masked_mean_abs(chroma(reflectance), chroma(multiply(gt.material, it.texture)), it.mask);
      m["shading_error"] = mean_abs(heads[1], gt.shading);
      m["material_error"] = mean_abs(heads[0], gt.material);
      m["reconstruction"] = mean_abs(mid.reconstruction.value(), wb_val[i]);
    });
    return reduce(out);
  };
  return run(cfg, st);
}

}  // namespace dociiw::pipeline
