#include "dociiw/checks.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "dociiw/ad/ops.hpp"
#include "dociiw/error.hpp"
#include "dociiw/image_io.hpp"
#include "dociiw/imaging.hpp"
#include "dociiw/losses.hpp"
#include "dociiw/manifest.hpp"
#include "dociiw/nn/checkpoint.hpp"
#include "dociiw/nn/unet.hpp"
#include "dociiw/pipeline/dataset.hpp"
#include "dociiw/pipeline/infer.hpp"
#include "dociiw/rng.hpp"
#include "dociiw/synth.hpp"

namespace dociiw::checks {

using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

bool all_passed(std::span<const CheckResult> results) noexcept {
  for (const auto& r : results) {
    if (!r.passed) return false;
  }
  return true;
}

std::string format(const CheckResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s  %-40s %.3e (tol %.1e)", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.value,
                r.tolerance);
  std::string s = buf;
  if (!r.detail.empty()) s += "  " + r.detail;
  return s;
}

namespace {

double evaluate(const Objective& f, const std::vector<Tensor>& inputs) {
  Tape t;
  std::vector<Var> vars;
  for (const auto& x : inputs) vars.push_back(t.constant(x));
  return f(vars).value().item();
}

std::vector<std::vector<float>> analytic(const Objective& f, const std::vector<Tensor>& inputs) {
  Tape t;
  std::vector<Var> vars;
  for (const auto& x : inputs) vars.push_back(t.variable(x));
  t.backward(f(vars));
  std::vector<std::vector<float>> g;
  for (const auto& v : vars) g.push_back(v.grad());
  return g;
}

double relative(double diff2, double a2, double n2) {
  const double denom = std::sqrt(std::max(a2, n2));
  if (denom < 1e-7) return std::sqrt(diff2) < 1e-7 ? 0.0 : 1.0;
  return std::sqrt(diff2) / denom;
}

}  // namespace

double gradient_error(const Objective& f, const std::vector<Tensor>& inputs, float step) {
  const auto g = analytic(f, inputs);
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  std::vector<Tensor> probe = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t e = 0; e < inputs[i].numel(); ++e) {
      const float x = inputs[i][e];
      const float xp = x + step, xm = x - step;
      probe[i][e] = xp;
      const double fp = evaluate(f, probe);
      probe[i][e] = xm;
      const double fm = evaluate(f, probe);
      probe[i][e] = x;
      const double num = (fp - fm) / (static_cast<double>(xp) - xm);
      const double an = g[i][e];
      diff2 += (an - num) * (an - num);
      a2 += an * an;
      n2 += num * num;
    }
  }
  return relative(diff2, a2, n2);
}

double directional_error(const Objective& f, const std::vector<Tensor>& inputs, int directions, std::uint64_t seed,
                         float step) {
  const auto g = analytic(f, inputs);
  double g2 = 0.0;
  for (const auto& gi : g) {
    for (float v : gi) g2 += static_cast<double>(v) * v;
  }
  Rng rng(seed);
  double worst = 0.0;
  for (int k = 0; k < directions; ++k) {
    std::vector<Tensor> plus = inputs, minus = inputs;
    double an = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      for (std::size_t e = 0; e < inputs[i].numel(); ++e) {
        const double d = rng.normal();
        an += g[i][e] * d;
        plus[i][e] = static_cast<float>(inputs[i][e] + step * d);
        minus[i][e] = static_cast<float>(inputs[i][e] - step * d);
      }
    }
    const double num = (evaluate(f, plus) - evaluate(f, minus)) / (2.0 * step);
    // |<g, d>| has standard deviation ||g|| for Gaussian d; flooring the
    // denominator there keeps near-orthogonal draws from dominating.
    worst = std::max(worst, std::abs(an - num) / std::max({std::abs(an), std::abs(num), std::sqrt(g2), 1e-12}));
  }
  return worst;
}

namespace {

Tensor uniform(Rng& rng, Shape s, float lo, float hi) {
  Tensor t = Tensor::zeros(std::move(s));
  for (float& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

// Values bounded away from zero: |v| in [lo, hi] with random sign.
Tensor away_from_zero(Rng& rng, Shape s, float lo, float hi) {
  Tensor t = uniform(rng, std::move(s), lo, hi);
  for (float& v : t.data) {
    if (rng.bernoulli(0.5)) v = -v;
  }
  return t;
}

// Smooth field whose forward differences and Laplacian stay away from zero.
Tensor curved_field(Rng& rng, int c, int h, int w) {
  Tensor t = Tensor::zeros(Shape::image(c, h, w));
  for (int k = 0; k < c; ++k) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        t.at(k, y, x) = 0.3f + 0.1f * k + 0.08f * x + 0.05f * y + 0.01f * (x * x + y * y) +
                        static_cast<float>(rng.uniform(-0.004, 0.004));
      }
    }
  }
  return t;
}

// Sum of w * v with fixed random weights, so every output element matters.
Var project(Var v, Rng& rng) {
  const Tensor w = uniform(rng, v.shape(), -1.0f, 1.0f);
  return ad::sum(ad::mul(v, v.tape().constant(w)));
}

Tensor chroma_offsets(Rng& rng, int h, int w) {
  // Per pixel (+0.06, +0.06, -0.12) in a random channel order; sums to zero.
  Tensor d = Tensor::zeros(Shape::image(3, h, w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int neg = static_cast<int>(rng.below(3));
      for (int c = 0; c < 3; ++c) d.at(c, y, x) = c == neg ? -0.12f : 0.06f;
    }
  }
  return d;
}

Tensor chroma_of(const Tensor& t) {
  Tensor out = t;
  for (int y = 0; y < t.shape.h(); ++y) {
    for (int x = 0; x < t.shape.w(); ++x) {
      const float s = t.at(0, y, x) + t.at(1, y, x) + t.at(2, y, x);
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = t.at(c, y, x) / s;
    }
  }
  return out;
}

CheckResult grad_check(std::string name, const Objective& f, const std::vector<Tensor>& inputs, double tol) {
  CheckResult r;
  r.name = std::move(name);
  r.tolerance = tol;
  try {
    r.value = gradient_error(f, inputs);
    r.passed = r.value < tol;
  } catch (const std::exception& e) {
    r.detail = e.what();
  }
  return r;
}

CheckResult outcome(std::string name, double value, double tol, std::string detail = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.value = value;
  r.tolerance = tol;
  r.passed = std::isfinite(value) && value < tol;
  r.detail = std::move(detail);
  return r;
}

}  // namespace

std::vector<CheckResult> gradient_suite(std::uint64_t seed) {
  constexpr double kTol = 2e-2;
  Rng rng(seed);
  std::vector<CheckResult> out;
  auto unary = [&](std::string name, std::function<Var(Var)> op, Tensor x) {
    const std::uint64_t wseed = rng.next_u64();
    out.push_back(grad_check(
        std::move(name),
        [op, wseed](std::span<const Var> in) {
          Rng wr(wseed);
          return project(op(in[0]), wr);
        },
        {std::move(x)}, kTol));
  };
  auto binary = [&](std::string name, std::function<Var(Var, Var)> op, Tensor a, Tensor b) {
    const std::uint64_t wseed = rng.next_u64();
    out.push_back(grad_check(
        std::move(name),
        [op, wseed](std::span<const Var> in) {
          Rng wr(wseed);
          return project(op(in[0], in[1]), wr);
        },
        {std::move(a), std::move(b)}, kTol));
  };

  const Shape s = Shape::image(2, 4, 4);
  binary("add", ad::add, uniform(rng, s, -1, 1), uniform(rng, s, -1, 1));
  binary("sub", ad::sub, uniform(rng, s, -1, 1), uniform(rng, s, -1, 1));
  binary("mul", ad::mul, uniform(rng, s, -1, 1), uniform(rng, s, -1, 1));
  binary("div", ad::div, uniform(rng, s, -1, 1), uniform(rng, s, 0.5f, 1.5f));
  binary("mul broadcast 1ch", ad::mul, uniform(rng, Shape::image(3, 4, 4), -1, 1),
         uniform(rng, Shape::image(1, 4, 4), -1, 1));
  binary("div broadcast scalar", ad::div, uniform(rng, s, -1, 1), uniform(rng, Shape::scalar(), 0.5f, 1.5f));
  unary("scale", [](Var x) { return ad::scale(x, -1.7f); }, uniform(rng, s, -1, 1));
  unary("add_scalar", [](Var x) { return ad::add_scalar(x, 0.3f); }, uniform(rng, s, -1, 1));
  unary("abs", [](Var x) { return ad::abs(x); }, away_from_zero(rng, s, 0.1f, 1.0f));
  unary("clamp_min", [](Var x) { return ad::clamp_min(x, 0.0f); }, away_from_zero(rng, s, 0.1f, 1.0f));
  unary("leaky_relu", [](Var x) { return ad::leaky_relu(x); }, away_from_zero(rng, s, 0.1f, 1.0f));
  unary("sigmoid", [](Var x) { return ad::sigmoid(x); }, uniform(rng, s, -3, 3));
  unary("softplus", [](Var x) { return ad::softplus(x); }, uniform(rng, s, -3, 3));
  unary("avg_pool2", [](Var x) { return ad::avg_pool2(x); }, uniform(rng, s, -1, 1));
  unary("upsample2", [](Var x) { return ad::upsample2(x); }, uniform(rng, Shape::image(2, 2, 2), -1, 1));
  unary("channel_sum", [](Var x) { return ad::channel_sum(x); }, uniform(rng, s, -1, 1));
  unary("sum", [](Var x) { return ad::sum(x); }, uniform(rng, s, -1, 1));
  unary("mean", [](Var x) { return ad::mean(x); }, uniform(rng, s, -1, 1));
  unary("diff_x", [](Var x) { return ad::diff_x(x); }, uniform(rng, s, -1, 1));
  unary("diff_y", [](Var x) { return ad::diff_y(x); }, uniform(rng, s, -1, 1));
  unary("laplacian", [](Var x) { return ad::laplacian(x); }, uniform(rng, s, -1, 1));
  binary("concat", ad::concat, uniform(rng, s, -1, 1), uniform(rng, Shape::image(1, 4, 4), -1, 1));
  {
    const std::uint64_t wseed = rng.next_u64();
    out.push_back(grad_check(
        "conv2d",
        [wseed](std::span<const Var> in) {
          Rng wr(wseed);
          return project(ad::conv2d(in[0], in[1], in[2]), wr);
        },
        {uniform(rng, s, -1, 1), uniform(rng, Shape{3, 2, 3, 3}, -1, 1), uniform(rng, Shape{3}, -1, 1)}, kTol));
  }

  // Losses on small rasters, built so no absolute value sits near its kink.
  {
    const Tensor a = uniform(rng, Shape::image(3, 5, 5), -1, 1);
    Tensor b = a;
    const Tensor off = away_from_zero(rng, a.shape, 0.1f, 0.3f);
    for (std::size_t i = 0; i < b.numel(); ++i) b[i] += off[i];
    Tensor mask = Tensor::zeros(Shape::image(1, 5, 5));
    for (float& m : mask.data) m = rng.bernoulli(0.6) ? 1.0f : 0.0f;
    mask[0] = 1.0f;
    out.push_back(grad_check(
        "masked_l1",
        [mask](std::span<const Var> in) { return losses::masked_l1(in[0], in[1], in[0].tape().constant(mask)); },
        {a, b}, kTol));
    out.push_back(grad_check(
        "l1", [](std::span<const Var> in) { return losses::l1(in[0], in[1]); }, {a, b}, kTol));
  }
  unary("chromaticity", [](Var x) { return losses::chromaticity(x); }, uniform(rng, Shape::image(3, 4, 4), 0.1f, 1));
  out.push_back(grad_check(
      "spatial_grad_l1", [](std::span<const Var> in) { return losses::spatial_grad_l1(in[0]); },
      {curved_field(rng, 3, 5, 5)}, kTol));
  out.push_back(grad_check(
      "laplacian_l1", [](std::span<const Var> in) { return losses::laplacian_l1(in[0]); },
      {curved_field(rng, 1, 5, 5)}, kTol));

  const losses::LossWeights weights;
  {
    const int h = 5, w = 5;
    const Tensor wb_hat = uniform(rng, Shape::image(3, h, w), 0.5f, 1.5f);
    const Tensor input = uniform(rng, Shape::image(3, h, w), 0.2f, 1.0f);
    Tensor iwb_hat = wb_hat;
    for (std::size_t i = 0; i < iwb_hat.numel(); ++i) iwb_hat[i] *= input[i];
    losses::WbnTargets tg;
    tg.input = input;
    tg.kernel = wb_hat;
    const Tensor koff = away_from_zero(rng, wb_hat.shape, 0.1f, 0.3f);
    for (std::size_t i = 0; i < tg.kernel.numel(); ++i) tg.kernel[i] += koff[i];
    const Tensor d = chroma_offsets(rng, h, w);
    const Tensor c = chroma_of(iwb_hat);
    tg.wb_image = Tensor::zeros(wb_hat.shape);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float in = iwb_hat.at(0, y, x) + iwb_hat.at(1, y, x) + iwb_hat.at(2, y, x);
        const float scale = rng.bernoulli(0.5) ? 1.3f : 0.7f;
        for (int k = 0; k < 3; ++k) tg.wb_image.at(k, y, x) = (c.at(k, y, x) + d.at(k, y, x)) * in * scale;
      }
    }
    tg.mask = Tensor::filled(Shape::image(1, h, w), 1.0f);
    tg.mask[3] = 0.0f;
    out.push_back(grad_check(
        "loss_wbn", [tg, weights](std::span<const Var> in) { return losses::wbn_objective(in[0], tg, weights).total; },
        {wb_hat}, kTol));
  }
  {
    const int h = 5, w = 5;
    const Tensor m_hat = curved_field(rng, 3, h, w);
    Tensor lambda = curved_field(rng, 1, h, w);
    for (float& v : lambda.data) v += 0.2f;
    const Tensor texture = uniform(rng, Shape::image(3, h, w), 0.2f, 1.0f);
    const Tensor d = chroma_offsets(rng, h, w);
    Tensor r = m_hat;
    for (std::size_t i = 0; i < r.numel(); ++i) r[i] *= texture[i];
    const Tensor cr = chroma_of(r);
    Tensor wb_input = Tensor::zeros(r.shape);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float sr = r.at(0, y, x) + r.at(1, y, x) + r.at(2, y, x);
        const float in = (lambda.at(0, y, x) + 0.1f) * sr;
        for (int k = 0; k < 3; ++k) wb_input.at(k, y, x) = (cr.at(k, y, x) + d.at(k, y, x)) * in;
      }
    }
    out.push_back(grad_check(
        "loss_smt",
        [wb_input, texture, weights](std::span<const Var> in) {
          Tape& t = in[0].tape();
          return losses::smt_objective(in[0], in[1], t.constant(wb_input), t.constant(texture), weights).total;
        },
        {m_hat, lambda}, kTol));
  }

  // Full objectives through freshly initialized networks at 16x16, over
  // every network parameter.
  {
    const int n = 16;
    synth::SynthesisParams sp;
    sp.width = sp.height = n;
    Rng srng = Rng::derive(seed, 1);
    const auto tex = synth::gen_text_texture(srng, sp);
    const synth::Sample smp = synth::synth_sample(tex.image, sp, srng);
    const losses::WbnTargets tg{pipeline::to_tensor(smp.input), pipeline::to_tensor(smp.kernel_gt),
                                pipeline::to_tensor(smp.wb_gt), pipeline::to_tensor(smp.mask)};
    const nn::UNet wbnet(nn::NetConfig::wbnet());
    const nn::ParamSet wp = wbnet.init(seed);
    std::vector<Tensor> wvals;
    for (const auto& p : wp.items()) wvals.push_back(p.value);
    CheckResult r;
    try {
      const double e = directional_error(
          [&](std::span<const Var> params) {
            Tape& t = params[0].tape();
            const Var wb_hat = wbnet.forward(params, t.constant(tg.input)).at(0);
            return losses::wbn_objective(wb_hat, tg, weights).total;
          },
          wvals, 10, seed + 2);
      r = outcome("wbnet objective (10 directions)", e, kTol);
    } catch (const std::exception& ex) {
      r = outcome("wbnet objective (10 directions)", 1.0, kTol, ex.what());
    }
    out.push_back(r);

    const nn::UNet smtnet(nn::NetConfig::smtnet());
    const nn::ParamSet spp = smtnet.init(seed + 3);
    std::vector<Tensor> svals;
    for (const auto& p : spp.items()) svals.push_back(p.value);
    const Tensor wb_in = tg.wb_image;
    const Tensor texture = pipeline::to_tensor(smp.texture);
    try {
      const double e = directional_error(
          [&](std::span<const Var> params) {
            Tape& t = params[0].tape();
            const Var x = t.constant(wb_in);
            const auto heads = smtnet.forward(params, x);
            return losses::smt_objective(heads.at(0), heads.at(1), x, t.constant(texture), weights).total;
          },
          svals, 10, seed + 4);
      r = outcome("smtnet objective (10 directions)", e, kTol);
    } catch (const std::exception& ex) {
      r = outcome("smtnet objective (10 directions)", 1.0, kTol, ex.what());
    }
    out.push_back(r);
  }
  return out;
}

std::vector<CheckResult> physics_suite(std::uint64_t seed, int pixels) {
  Rng rng(seed);
  std::vector<CheckResult> out;
  const int w = pixels, h = 1;

  std::vector<float> px(static_cast<std::size_t>(w) * 3);
  for (float& v : px) v = static_cast<float>(rng.uniform(0.01, 1.0));
  const LinearImage base(w, h, px);
  const ChromaticityMap cb = chromaticity(base);
  double scale_err = 0.0, sum_err = 0.0;
  for (double s : {0.1, 2.0, 7.0, rng.uniform(0.01, 100.0)}) {
    std::vector<float> scaled = px;
    for (float& v : scaled) v = static_cast<float>(v * s);
    const ChromaticityMap cs = chromaticity(LinearImage(w, h, scaled));
    for (std::size_t i = 0; i < cs.data.size(); ++i) {
      scale_err = std::max(scale_err, static_cast<double>(std::abs(cs.data[i] - cb.data[i])));
    }
  }
  for (int p = 0; p < w; ++p) {
    if (!cb.mask[p]) continue;
    sum_err = std::max(sum_err, std::abs(cb.data[p * 3] + cb.data[p * 3 + 1] + cb.data[p * 3 + 2] - 1.0));
  }
  out.push_back(outcome("chromaticity scale invariance", scale_err, 1e-5));
  out.push_back(outcome("chromaticity sums to one", sum_err, 1e-5));

  std::vector<float> sh(static_cast<std::size_t>(w));
  for (float& v : sh) v = static_cast<float>(rng.uniform(1e-3, 2.0));
  const ShadingMap shading(w, h, 1, sh);
  const LinearImage back = divide_safe(hadamard(base, shading), shading);
  double rt = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i) rt = std::max(rt, static_cast<double>(std::abs(back[i] - base[i])));
  out.push_back(outcome("compose/divide round trip", rt, 1e-5));

  const LinearImage same = apply_wb(WBKernel::filled(w, h, 1, 1, 1), base);
  bool identical = true;
  for (std::size_t i = 0; i < same.size(); ++i) identical = identical && same[i] == base[i];
  out.push_back(outcome("unit kernel is the identity", identical ? 0.0 : 1.0, 0.5));

  const IlluminantSpec white({Light{{1, 1, 1}, 0.6f}, Light{{1, 1, 1}, 0.4f}});
  const ShadingMap lam2(w, h, 1, std::vector<float>(sh.rbegin(), sh.rend()));
  const ShadingMap rendered = render_shading(white, std::vector<ShadingMap>{shading, lam2});
  double ach = 0.0;
  for (int p = 0; p < w; ++p) {
    ach = std::max({ach, static_cast<double>(std::abs(rendered[p * 3] - rendered[p * 3 + 1])),
                    static_cast<double>(std::abs(rendered[p * 3] - rendered[p * 3 + 2]))});
  }
  out.push_back(outcome("achromatic lights give gray shading", ach, 1e-6));

  // Chromaticity of the white-balanced image equals that of M * T.
  synth::SynthesisParams sp;
  sp.width = sp.height = 32;
  sp.two_light_probability = 0.5;
  double eq_err = 0.0, wb_err = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t k = 0; checked < static_cast<std::size_t>(pixels); ++k) {
    Rng srng = Rng::derive(seed, k + 100);
    const auto tex = synth::gen_text_texture(srng, sp);
    const synth::Sample s = synth::synth_sample(tex.image, sp, srng);
    const ChromaticityMap a = chromaticity(s.wb_gt);
    const ChromaticityMap b = chromaticity(hadamard(s.material_gt, s.texture));
    const LinearImage corrected = apply_wb(s.kernel_gt, s.input);
    for (std::size_t p = 0; p < s.mask.extent().pixels(); ++p) {
      if (!s.mask[p] || !a.mask[p]) continue;
      ++checked;
      for (int c = 0; c < 3; ++c) {
        eq_err = std::max(eq_err, static_cast<double>(std::abs(a.data[p * 3 + c] - b.data[p * 3 + c])));
        wb_err = std::max(wb_err, static_cast<double>(std::abs(corrected[p * 3 + c] - s.wb_gt[p * 3 + c])));
      }
    }
  }
  out.push_back(outcome("white-balanced chromaticity matches M*T", eq_err, 1e-5));
  out.push_back(outcome("kernel maps input to white-balanced", wb_err, 1e-5));
  return out;
}

std::vector<CheckResult> selftest(std::uint64_t seed, const std::filesystem::path& scratch) {
  std::vector<CheckResult> out = physics_suite(seed);
  std::error_code ec;
  std::filesystem::create_directories(scratch, ec);
  if (ec) {
    out.push_back(outcome("scratch directory", 1.0, 0.5, ec.message()));
    return out;
  }

  auto guarded = [&](const std::string& name, const std::function<CheckResult()>& fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back(outcome(name, 1.0, 0.5, e.what()));
    }
  };

  Rng rng(seed ^ 0xC0FFEE);
  synth::SynthesisParams sp;
  sp.width = sp.height = 32;
  sp.train_samples = 6;
  sp.val_samples = 4;
  sp.seed = seed;

  guarded("pfm round trip", [&] {
    const auto tex = synth::gen_text_texture(rng, sp);
    io::write_pfm(scratch / "rt.pfm", tex.image);
    const LinearImage back = io::read_pfm(scratch / "rt.pfm");
    bool same = back.extent() == tex.image.extent();
    for (std::size_t i = 0; same && i < back.size(); ++i) same = back[i] == tex.image[i];
    return outcome("pfm round trip", same ? 0.0 : 1.0, 0.5);
  });
  guarded("png round trip", [&] {
    const auto tex = synth::gen_text_texture(rng, sp);
    io::write_png(scratch / "rt.png", tex.image, true);
    const LinearImage back = io::read_png(scratch / "rt.png", true);
    double err = 0.0;
    for (std::size_t i = 0; i < back.size(); ++i) {
      err = std::max(err, static_cast<double>(std::abs(io::linear_to_srgb(back[i]) - io::linear_to_srgb(tex.image[i]))));
    }
    return outcome("png round trip (sRGB code values)", err, 0.5 / 255.0 + 1e-6);
  });
  guarded("checkpoint round trip", [&] {
    const nn::UNet net(nn::NetConfig::smtnet());
    nn::Checkpoint ck{net.config(), net.init(seed), std::nullopt, 7, 2, seed};
    ck.optimizer = nn::AdamState::zeros_like(ck.params);
    const auto bytes = nn::serialize(ck);
    nn::save_checkpoint(scratch / "rt.ckpt", ck);
    const auto again = nn::serialize(nn::load_checkpoint(scratch / "rt.ckpt", net.config()));
    return outcome("checkpoint round trip", bytes == again ? 0.0 : 1.0, 0.5);
  });

  guarded("dataset", [&] {
    const auto summary = synth::build_procedural_dataset(sp, scratch / "dataset");
    const auto first = synth::read_manifest(summary.manifest);
    synth::build_procedural_dataset(sp, scratch / "dataset_again");
    const auto second = synth::read_manifest(scratch / "dataset_again" / "manifest.jsonl");
    bool same = first.size() == second.size();
    for (std::size_t i = 0; same && i < first.size(); ++i) same = synth::to_json_line(first[i]) == synth::to_json_line(second[i]);
    return outcome("dataset regeneration is identical", same ? 0.0 : 1.0, 0.5);
  });

  guarded("ground-truth reconstruction", [&] {
    const auto entries = synth::read_manifest(scratch / "dataset" / "manifest.jsonl");
    const auto root = scratch / "dataset";
    double worst = 0.0;
    for (const auto& e : entries) {
      const LinearImage input = io::read_pfm(root / e.input);
      const LinearImage texture = io::read_pfm(root / e.texture);
      const Mask mask = io::read_mask_png(root / e.mask);
      const auto d = pipeline::assemble(input, io::read_pfm_kernel(root / e.kernel_gt), io::read_pfm(root / e.material_gt),
                                        io::read_pfm_shading(root / e.shading_gt), &texture);
      const LinearImage recon = pipeline::reconstruct_input(d, texture);
      double s = 0.0;
      std::size_t n = 0;
      for (std::size_t p = 0; p < mask.extent().pixels(); ++p) {
        if (!mask[p]) continue;
        for (int c = 0; c < 3; ++c) s += std::abs(recon[p * 3 + c] - input[p * 3 + c]);
        n += 3;
      }
      worst = std::max(worst, n ? s / static_cast<double>(n) : 0.0);
    }
    return outcome("ground-truth path reconstructs input", worst, 1e-4);
  });
  return out;
}

}  // namespace dociiw::checks
