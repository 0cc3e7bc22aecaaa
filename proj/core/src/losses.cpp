#include "dociiw/losses.hpp"

#include "dociiw/error.hpp"

namespace dociiw::losses {

using namespace ad;

void LossWeights::validate() const {
  for (float v : {alpha1, alpha2, beta1, beta2, beta3, beta4}) {
    if (!(v >= 0.0f)) throw Error(Errc::OutOfRange, "loss weights must be non-negative");
  }
}

double LossReport::term(const std::string& name) const {
  for (const auto& t : terms) {
    if (t.name == name) return t.value;
  }
  throw Error(Errc::InvalidArgument, "no loss term named " + name);
}

LossReport Loss::report() const {
  LossReport r;
  r.total = total.value().item();
  for (const auto& [name, v] : terms) r.terms.push_back({name, v.value().item()});
  return r;
}

namespace {

void require_same(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error(Errc::ShapeMismatch, std::string(op) + ": " + a.shape().str() + " vs " + b.shape().str());
  }
}

Var weighted(Var total, Var term, float w) { return w == 0.0f ? total : add(total, scale(term, w)); }

}  // namespace

Var masked_l1(Var a, Var b, Var mask) {
  require_same(a, b, "masked_l1");
  const Shape ms = mask.shape();
  const Shape s = a.shape();
  if (ms.rank() != 3 || ms.c() != 1 || ms.h() != s.h() || ms.w() != s.w()) {
    throw Error(Errc::ShapeMismatch, "masked_l1: mask " + ms.str() + " for tensor " + s.str());
  }
  double on = 0.0;
  for (float m : mask.value().data) on += m;
  if (on == 0.0) return a.tape().constant(Tensor::scalar(0.0f));
  const float count = static_cast<float>(on * s.c());
  return scale(sum(mul(abs(sub(a, b)), mask)), 1.0f / count);
}

Var l1(Var a, Var b) {
  require_same(a, b, "l1");
  return mean(abs(sub(a, b)));
}

Var chromaticity(Var img, float eps) { return div(img, clamp_min(channel_sum(img), eps)); }

Var intensity(Var img) { return channel_sum(img); }

Var spatial_grad_l1(Var field) {
  const Shape s = field.shape();
  if (s.rank() != 3 || s.h() < 3 || s.w() < 3) throw Error(Errc::TooSmall, "spatial_grad_l1: field smaller than 3x3");
  const Var gx = sum(abs(diff_x(field)));
  const Var gy = sum(abs(diff_y(field)));
  const float n = static_cast<float>(s.c()) * (static_cast<float>(s.h()) * (s.w() - 1) + (s.h() - 1.0f) * s.w());
  return scale(add(gx, gy), 1.0f / n);
}

Var laplacian_l1(Var field) {
  const Shape s = field.shape();
  if (s.rank() != 3 || s.h() < 3 || s.w() < 3) throw Error(Errc::TooSmall, "laplacian_l1: field smaller than 3x3");
  return mean(abs(laplacian(field)));
}

Loss loss_wbn(Var wb_hat, Var wb_gt, Var cwb_hat, Var cwb_gt, Var in_hat, Var in_gt, Var mask, const LossWeights& w) {
  w.validate();
  require_same(wb_hat, wb_gt, "loss_wbn");
  require_same(cwb_hat, cwb_gt, "loss_wbn");
  require_same(in_hat, in_gt, "loss_wbn");
  if (wb_hat.shape().h() != in_hat.shape().h() || wb_hat.shape().w() != in_hat.shape().w() ||
      cwb_hat.shape().h() != in_hat.shape().h() || cwb_hat.shape().w() != in_hat.shape().w()) {
    throw Error(Errc::ShapeMismatch, "loss_wbn: rasters differ in spatial size");
  }
  const Var l_wb = masked_l1(wb_hat, wb_gt, mask);
  const Var l_ch = masked_l1(cwb_hat, cwb_gt, mask);
  const Var l_int = l1(in_hat, in_gt);
  Var total = weighted(weighted(l_wb, l_ch, w.alpha1), l_int, w.alpha2);
  return {total, {{"L_wb", l_wb}, {"L_ch", l_ch}, {"L_int", l_int}}};
}

Loss loss_smt(Var cwb_hat, Var cr_hat, Var lambda_p, Var lambda_e, Var iwb_recon, Var iwb_in, Var m_hat,
              const LossWeights& w) {
  w.validate();
  require_same(cwb_hat, cr_hat, "loss_smt");
  require_same(lambda_p, lambda_e, "loss_smt");
  require_same(iwb_recon, iwb_in, "loss_smt");
  if (lambda_p.shape().rank() != 3 || lambda_p.shape().c() != 1) {
    throw Error(Errc::ShapeMismatch, "loss_smt: shading maps must be 1-channel");
  }
  const Shape s = lambda_p.shape();
  for (Var v : {cwb_hat, iwb_in, m_hat}) {
    if (v.shape().rank() != 3 || v.shape().h() != s.h() || v.shape().w() != s.w()) {
      throw Error(Errc::ShapeMismatch, "loss_smt: rasters differ in spatial size");
    }
  }
  const Var l_cc = l1(cwb_hat, cr_hat);
  const Var l_sc = l1(lambda_p, lambda_e);
  const Var l_r = l1(iwb_recon, iwb_in);
  const Var l_lap = laplacian_l1(lambda_p);
  const Var l_grad = spatial_grad_l1(m_hat);
  Var total = l_cc;
  total = weighted(total, l_sc, w.beta1);
  total = weighted(total, l_r, w.beta2);
  total = weighted(total, l_lap, w.beta3);
  total = weighted(total, l_grad, w.beta4);
  return {total, {{"L_cc", l_cc}, {"L_sc", l_sc}, {"L_r", l_r}, {"L_lap", l_lap}, {"L_grad", l_grad}}};
}

double masked_l1(const Tensor& a, const Tensor& b, const Tensor& mask) {
  Tape t;
  return masked_l1(t.constant(a), t.constant(b), t.constant(mask)).value().item();
}

double spatial_grad_l1(const Tensor& field) {
  Tape t;
  return spatial_grad_l1(t.constant(field)).value().item();
}

double laplacian_l1(const Tensor& field) {
  Tape t;
  return laplacian_l1(t.constant(field)).value().item();
}

LossReport loss_wbn(const Tensor& wb_hat, const Tensor& wb_gt, const Tensor& cwb_hat, const Tensor& cwb_gt,
                    const Tensor& in_hat, const Tensor& in_gt, const Tensor& mask, const LossWeights& w) {
  Tape t;
  return loss_wbn(t.constant(wb_hat), t.constant(wb_gt), t.constant(cwb_hat), t.constant(cwb_gt), t.constant(in_hat),
                  t.constant(in_gt), t.constant(mask), w)
      .report();
}

LossReport loss_smt(const Tensor& cwb_hat, const Tensor& cr_hat, const Tensor& lambda_p, const Tensor& lambda_e,
                    const Tensor& iwb_recon, const Tensor& iwb_in, const Tensor& m_hat, const LossWeights& w) {
  Tape t;
  return loss_smt(t.constant(cwb_hat), t.constant(cr_hat), t.constant(lambda_p), t.constant(lambda_e),
                  t.constant(iwb_recon), t.constant(iwb_in), t.constant(m_hat), w)
      .report();
}

Loss wbn_objective(Var wb_hat, const WbnTargets& targets, const LossWeights& w) {
  Tape& t = wb_hat.tape();
  const Var input = t.constant(targets.input, "input");
  const Var wb_gt = t.constant(targets.kernel, "kernel_gt");
  const Var iwb_gt = t.constant(targets.wb_image, "wb_gt");
  const Var mask = t.constant(targets.mask, "mask");
  const Var iwb_hat = mul(wb_hat, input);
  return loss_wbn(wb_hat, wb_gt, chromaticity(iwb_hat), chromaticity(iwb_gt), intensity(iwb_hat), intensity(iwb_gt),
                  mask, w);
}

Loss smt_objective(Var m_hat, Var lambda_p, Var wb_input, Var texture, const LossWeights& w,
                   SmtIntermediates* intermediates) {
  const Var reflectance = mul(m_hat, texture);
  const Var lambda_e = div(intensity(wb_input), clamp_min(intensity(reflectance), kDivideEps));
  const Var recon = mul(reflectance, lambda_p);
  if (intermediates) *intermediates = {reflectance, lambda_e, recon};
  return loss_smt(chromaticity(wb_input), chromaticity(reflectance), lambda_p, lambda_e, recon, wb_input, m_hat, w);
}

}  // namespace dociiw::losses
