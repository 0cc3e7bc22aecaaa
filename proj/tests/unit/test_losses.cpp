#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "dociiw/ad/ops.hpp"
#include "dociiw/error.hpp"
#include "dociiw/losses.hpp"
#include "oracles.hpp"

using namespace dociiw;
using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

// Predictions offset from targets by at least `gap` so no |.| sits on its kink.
Tensor offset(const Tensor& t, oracle::Gen& gen, double gap) {
  Tensor o = t;
  for (float& v : o.data) v += static_cast<float>((gen.coin() ? 1 : -1) * gen.uniform(gap, 3 * gap));
  return o;
}

Tensor smooth_field(int c, int h, int w, oracle::Gen& gen, double lo, double hi) {
  Tensor t = Tensor::zeros(Shape{c, h, w});
  const double ax = gen.uniform(-0.05, 0.05), ay = gen.uniform(-0.05, 0.05), b = gen.uniform(lo, hi);
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        t.at(k, y, x) = static_cast<float>(std::clamp(b + ax * x + ay * y + 0.02 * std::sin(x * 1.3 + y * 0.7 + k), lo, hi));
  return t;
}

struct WbnCase {
  Tensor wb_hat, wb_gt, cwb_hat, cwb_gt, in_hat, in_gt, mask;
};

WbnCase wbn_case(oracle::Gen& gen, int h, int w) {
  WbnCase c;
  c.wb_gt = gen.tensor(Shape{3, h, w}, 0.5, 2.0);
  c.wb_hat = offset(c.wb_gt, gen, 0.01);
  c.cwb_gt = gen.tensor(Shape{3, h, w}, 0.1, 0.6);
  c.cwb_hat = offset(c.cwb_gt, gen, 0.01);
  c.in_gt = gen.tensor(Shape{1, h, w}, 0.2, 3.0);
  c.in_hat = offset(c.in_gt, gen, 0.01);
  c.mask = gen.mask(h, w);
  c.mask.data[0] = 1.0f;
  return c;
}

double naive_wbn(const WbnCase& c, const losses::LossWeights& w) {
  return oracle::masked_l1(c.wb_hat, c.wb_gt, c.mask) + w.alpha1 * oracle::masked_l1(c.cwb_hat, c.cwb_gt, c.mask) +
         w.alpha2 * oracle::l1(c.in_hat, c.in_gt);
}

}  // namespace

TEST_CASE("masked_l1 hand cases") {
  const Tensor a(Shape{1, 1, 2}, {1.0f, 3.0f}), b(Shape{1, 1, 2}, {0.0f, 0.0f});
  CHECK(losses::masked_l1(a, b, Tensor(Shape{1, 1, 2}, {1.0f, 0.0f})) == doctest::Approx(1.0));
  CHECK(losses::masked_l1(a, b, Tensor(Shape{1, 1, 2}, {0.0f, 0.0f})) == 0.0);
  CHECK(losses::masked_l1(a, a, Tensor(Shape{1, 1, 2}, {1.0f, 1.0f})) == 0.0);
  CHECK_THROWS_AS(losses::masked_l1(a, Tensor(Shape{1, 2, 1}, {0, 0}), Tensor(Shape{1, 1, 2}, {1, 1})), Error);
}

TEST_CASE("stencil losses: constants, ramps, size floor, naive oracle") {
  const Tensor flat = Tensor::filled(Shape{1, 4, 4}, 0.3f);
  CHECK(losses::spatial_grad_l1(flat) == 0.0);
  CHECK(losses::laplacian_l1(flat) == 0.0);
  Tensor ramp = Tensor::zeros(Shape{1, 5, 6});
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) ramp.at(0, y, x) = 0.1f * x - 0.2f * y + 1.0f;
  CHECK(losses::spatial_grad_l1(ramp) > 0.0);
  CHECK(losses::laplacian_l1(ramp) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK_THROWS_AS(losses::laplacian_l1(Tensor::zeros(Shape{1, 2, 5})), Error);
  CHECK_THROWS_AS(losses::spatial_grad_l1(Tensor::zeros(Shape{1, 5, 2})), Error);

  oracle::Gen gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor f = gen.tensor(Shape{gen.integer(1, 3), 5, 5}, -1.0, 1.0);
    CHECK(losses::spatial_grad_l1(f) == doctest::Approx(oracle::grad_l1(f)).epsilon(1e-5));
    CHECK(losses::laplacian_l1(f) == doctest::Approx(oracle::laplacian_l1(f)).epsilon(1e-5));
  }
}

TEST_CASE("loss_wbn: zero at the fixed point, weight zeroing, naive oracle, linearity") {
  oracle::Gen gen(2);
  const losses::LossWeights w;
  const auto c = wbn_case(gen, 4, 4);
  const auto zero = losses::loss_wbn(c.wb_gt, c.wb_gt, c.cwb_gt, c.cwb_gt, c.in_gt, c.in_gt, c.mask, w);
  CHECK(zero.total == 0.0);
  for (const auto& t : zero.terms) CHECK(t.value == 0.0);

  for (int trial = 0; trial < 20; ++trial) {
    const auto k = wbn_case(gen, 4, 4);
    const auto r = losses::loss_wbn(k.wb_hat, k.wb_gt, k.cwb_hat, k.cwb_gt, k.in_hat, k.in_gt, k.mask, w);
    CHECK(r.total == doctest::Approx(naive_wbn(k, w)).epsilon(1e-5));
    CHECK(r.term("L_wb") == doctest::Approx(oracle::masked_l1(k.wb_hat, k.wb_gt, k.mask)).epsilon(1e-5));
    CHECK(r.total == doctest::Approx(r.term("L_wb") + w.alpha1 * r.term("L_ch") + w.alpha2 * r.term("L_int")).epsilon(1e-6));

    losses::LossWeights none = w;
    none.alpha1 = none.alpha2 = 0.0f;
    const auto r0 = losses::loss_wbn(k.wb_hat, k.wb_gt, k.cwb_hat, k.cwb_gt, k.in_hat, k.in_gt, k.mask, none);
    CHECK(r0.total == doctest::Approx(r0.term("L_wb")));

    losses::LossWeights twice = w;
    twice.alpha1 *= 2.0f;
    const auto r2 = losses::loss_wbn(k.wb_hat, k.wb_gt, k.cwb_hat, k.cwb_gt, k.in_hat, k.in_gt, k.mask, twice);
    CHECK(r2.total - r.total == doctest::Approx(r.term("L_ch")).epsilon(1e-5));
  }
}

TEST_CASE("loss_smt: perfect decomposition leaves only the roughness terms") {
  oracle::Gen gen(3);
  const int h = 8, w = 8;
  const Tensor m = smooth_field(3, h, w, gen, 0.85, 1.0);
  const Tensor t = gen.tensor(Shape{3, h, w}, 0.05, 1.0);
  const Tensor lam = smooth_field(1, h, w, gen, 0.3, 1.0);
  Tape tape;
  const Var vm = tape.constant(m), vt = tape.constant(t), vl = tape.constant(lam);
  const Var iwb = ad::mul(ad::mul(vm, vt), vl);
  const auto r = losses::smt_objective(vm, vl, iwb, vt, losses::LossWeights{}).report();
  CHECK(r.term("L_cc") < 1e-6);
  CHECK(r.term("L_sc") < 1e-5);
  CHECK(r.term("L_r") < 1e-6);
  CHECK(r.term("L_lap") == doctest::Approx(oracle::laplacian_l1(lam)).epsilon(1e-4));
  CHECK(r.term("L_grad") == doctest::Approx(oracle::grad_l1(m)).epsilon(1e-4));

  const Tensor mc = Tensor::filled(Shape{3, h, w}, 0.9f);
  Tensor affine = Tensor::zeros(Shape{1, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) affine.at(0, y, x) = 0.5f + 0.03f * x + 0.01f * y;
  const auto z = losses::loss_smt(oracle::chroma(t), oracle::chroma(t), affine, affine, t, t, mc, losses::LossWeights{});
  CHECK(z.term("L_grad") == 0.0);
  CHECK(z.term("L_lap") == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(z.total == doctest::Approx(0.1 * z.term("L_lap")).epsilon(1e-6));
}

TEST_CASE("loss_smt total is the weighted term sum and matches the naive oracle") {
  oracle::Gen gen(4);
  losses::LossWeights w;
  w.beta1 = 0.7f;
  w.beta3 = 0.3f;
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor a = gen.tensor(Shape{3, 6, 6}, 0.1, 0.6), b = gen.tensor(Shape{3, 6, 6}, 0.1, 0.6);
    const Tensor lp = gen.tensor(Shape{1, 6, 6}, 0.2, 1.0), le = gen.tensor(Shape{1, 6, 6}, 0.2, 1.0);
    const Tensor ir = gen.tensor(Shape{3, 6, 6}, 0, 1), ii = gen.tensor(Shape{3, 6, 6}, 0, 1);
    const Tensor m = gen.tensor(Shape{3, 6, 6}, 0.5, 1);
    const auto r = losses::loss_smt(a, b, lp, le, ir, ii, m, w);
    const double naive = oracle::l1(a, b) + w.beta1 * oracle::l1(lp, le) + w.beta2 * oracle::l1(ir, ii) +
                         w.beta3 * oracle::laplacian_l1(lp) + w.beta4 * oracle::grad_l1(m);
    CHECK(r.total == doctest::Approx(naive).epsilon(1e-5));
    double sum = r.term("L_cc") + w.beta1 * r.term("L_sc") + w.beta2 * r.term("L_r") + w.beta3 * r.term("L_lap") +
                 w.beta4 * r.term("L_grad");
    CHECK(std::abs(r.total - sum) < 1e-6);
  }
  CHECK_THROWS_AS(losses::loss_smt(Tensor::zeros(Shape{3, 6, 6}), Tensor::zeros(Shape{3, 6, 6}),
                                   Tensor::zeros(Shape{3, 6, 6}), Tensor::zeros(Shape{3, 6, 6}),
                                   Tensor::zeros(Shape{3, 6, 6}), Tensor::zeros(Shape{3, 6, 6}),
                                   Tensor::zeros(Shape{3, 6, 6}), w),
                  Error);
}

TEST_CASE("property: batch-mean loss is permutation invariant") {
  oracle::Gen gen(5);
  std::vector<WbnCase> batch;
  for (int i = 0; i < 8; ++i) batch.push_back(wbn_case(gen, 4, 4));
  auto batch_mean = [&](const std::vector<WbnCase>& b) {
    double s = 0.0;
    for (const auto& c : b)
      s += losses::loss_wbn(c.wb_hat, c.wb_gt, c.cwb_hat, c.cwb_gt, c.in_hat, c.in_gt, c.mask, {}).total;
    return s / b.size();
  };
  const double base = batch_mean(batch);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(batch.begin(), batch.end(), gen.eng);
    CHECK(std::abs(batch_mean(batch) - base) < 1e-6);
  }
}

TEST_CASE("loss gradients match finite differences of the naive oracle") {
  oracle::Gen gen(6);
  const losses::LossWeights w;
  for (int trial = 0; trial < 5; ++trial) {
    const auto c = wbn_case(gen, 5, 6);
    Tape tape;
    const Var wb = tape.variable(c.wb_hat), cw = tape.variable(c.cwb_hat), in = tape.variable(c.in_hat);
    const auto loss = losses::loss_wbn(wb, tape.constant(c.wb_gt), cw, tape.constant(c.cwb_gt), in,
                                       tape.constant(c.in_gt), tape.constant(c.mask), w);
    tape.backward(loss.total);

    std::vector<double> x;
    for (const Tensor* t : {&c.wb_hat, &c.cwb_hat, &c.in_hat})
      for (float v : t->data) x.push_back(v);
    auto f = [&](const std::vector<double>& p) {
      WbnCase k = c;
      std::size_t i = 0;
      for (Tensor* t : {&k.wb_hat, &k.cwb_hat, &k.in_hat})
        for (float& v : t->data) v = static_cast<float>(p[i++]);
      return naive_wbn(k, w);
    };
    const auto num = oracle::fd_gradient(f, x, 1e-3);
    std::vector<float> ana;
    for (Var v : {wb, cw, in}) {
      const auto g = v.grad();
      ana.insert(ana.end(), g.begin(), g.end());
    }
    double diff = 0, na = 0, nn = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      diff += (ana[i] - num[i]) * (ana[i] - num[i]);
      na += double(ana[i]) * ana[i];
      nn += num[i] * num[i];
    }
    CHECK(std::sqrt(diff) / std::max(std::sqrt(na), std::sqrt(nn)) < 1e-2);
  }

  for (int trial = 0; trial < 5; ++trial) {
    const Tensor a = gen.tensor(Shape{3, 6, 6}, 0.1, 0.6);
    const Tensor b = offset(a, gen, 0.01);
    const Tensor le = gen.tensor(Shape{1, 6, 6}, 0.3, 1.0);
    const Tensor lp = offset(le, gen, 0.01);
    const Tensor ii = gen.tensor(Shape{3, 6, 6}, 0.2, 1.0);
    const Tensor ir = offset(ii, gen, 0.01);
    // bowl and ramp keep every Laplacian and difference away from zero
    Tensor bowl = Tensor::zeros(Shape{1, 6, 6}), m = Tensor::zeros(Shape{3, 6, 6});
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) {
        bowl.at(0, y, x) = lp.at(0, y, x) * 0.01f + 0.1f * (x * x + y * y);
        for (int k = 0; k < 3; ++k) m.at(k, y, x) = 0.1f * x + 0.13f * y + 0.01f * b.at(k, y, x);
      }
    std::vector<Tensor> in = {a, b, bowl, le, ir, ii, m};
    Tape tape;
    std::vector<Var> v;
    for (const auto& t : in) v.push_back(tape.variable(t));
    const auto loss = losses::loss_smt(v[0], v[1], v[2], v[3], v[4], v[5], v[6], w);
    tape.backward(loss.total);

    std::vector<double> x;
    for (const auto& t : in)
      for (float e : t.data) x.push_back(e);
    auto f = [&](const std::vector<double>& p) {
      std::vector<Tensor> k = in;
      std::size_t i = 0;
      for (auto& t : k)
        for (float& e : t.data) e = static_cast<float>(p[i++]);
      return oracle::l1(k[0], k[1]) + w.beta1 * oracle::l1(k[2], k[3]) + w.beta2 * oracle::l1(k[4], k[5]) +
             w.beta3 * oracle::laplacian_l1(k[2]) + w.beta4 * oracle::grad_l1(k[6]);
    };
    const auto num = oracle::fd_gradient(f, x, 1e-3);
    double diff = 0, na = 0, nn = 0;
    std::size_t i = 0;
    for (Var var : v)
      for (float g : var.grad()) {
        diff += (g - num[i]) * (g - num[i]);
        na += double(g) * g;
        nn += num[i] * num[i];
        ++i;
      }
    CHECK(std::sqrt(diff) / std::max(std::sqrt(na), std::sqrt(nn)) < 1e-2);
  }
}

TEST_CASE("texture is data: no gradient reaches it") {
  oracle::Gen gen(7);
  Tape tape;
  const Var m = tape.variable(gen.tensor(Shape{3, 6, 6}, 0.5, 1.0));
  const Var lam = tape.variable(gen.tensor(Shape{1, 6, 6}, 0.3, 1.0));
  const Var iwb = tape.constant(gen.tensor(Shape{3, 6, 6}, 0.1, 1.0), "wb_input");
  const Var tex = tape.constant(gen.tensor(Shape{3, 6, 6}, 0.1, 1.0), "texture");
  const auto loss = losses::smt_objective(m, lam, iwb, tex, {});
  tape.backward(loss.total);
  CHECK_FALSE(tex.requires_grad());
  for (float g : tex.grad()) CHECK(g == 0.0f);
  bool any = false;
  for (float g : m.grad()) any = any || g != 0.0f;
  CHECK(any);
}

TEST_CASE("negative weights are rejected") {
  losses::LossWeights w;
  w.beta2 = -1.0f;
  CHECK_THROWS_AS(w.validate(), Error);
}
