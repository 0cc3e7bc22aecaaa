#pragma once

// Training objectives for the white-balancing and material/shading stages.
//
//   L_wbn = L_wb(WB^, WB) + a1 L_ch(C^_wb, C_wb) + a2 L_int(In^_wb, In)
//   L_smt = L_cc(C^_wb, C^_R) + b1 L_sc(lam_p, lam_e) + b2 L_r(I'_wb, I_wb)
//           + b3 |lap(lam_p)| + b4 |grad(M^)|
//
// Every term is an L1 mean. The Var overloads build differentiable graphs;
// the Tensor overloads are their evaluation twins and run on a throwaway
// tape with no differentiable leaves.

#include <string>
#include <vector>

#include "dociiw/ad/ops.hpp"
#include "dociiw/imaging.hpp"

namespace dociiw::losses {

struct LossWeights {
  float alpha1 = 1.0f;
  float alpha2 = 0.5f;
  float beta1 = 1.0f;
  float beta2 = 1.0f;
  float beta3 = 0.1f;
  float beta4 = 0.1f;

  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossTerm {
  std::string name;
  double value = 0.0;
};

struct LossReport {
  double total = 0.0;
  std::vector<LossTerm> terms;  // unweighted

  /// Value of the named term; throws InvalidArgument if absent.
  double term(const std::string& name) const;
};

/// Differentiable loss with its unweighted terms kept addressable.
struct Loss {
  ad::Var total;
  std::vector<std::pair<std::string, ad::Var>> terms;

  LossReport report() const;
};

/// Mean |a - b| over elements whose pixel is set in `mask` (a (1,H,W) tensor
/// of 0/1 that broadcasts over channels). Zero when the mask is empty.
ad::Var masked_l1(ad::Var a, ad::Var b, ad::Var mask);
ad::Var l1(ad::Var a, ad::Var b);

/// Per-pixel c / max(r + g + b, eps).
ad::Var chromaticity(ad::Var img, float eps = kChromaEps);
/// Per-pixel channel sum.
ad::Var intensity(ad::Var img);

/// Mean |forward difference| over all x- and y-differences. Field >= 3x3.
ad::Var spatial_grad_l1(ad::Var field);
/// Mean |5-point Laplacian| over interior pixels. Field >= 3x3.
ad::Var laplacian_l1(ad::Var field);

Loss loss_wbn(ad::Var wb_hat, ad::Var wb_gt, ad::Var cwb_hat, ad::Var cwb_gt, ad::Var in_hat, ad::Var in_gt,
              ad::Var mask, const LossWeights& w);

Loss loss_smt(ad::Var cwb_hat, ad::Var cr_hat, ad::Var lambda_p, ad::Var lambda_e, ad::Var iwb_recon,
              ad::Var iwb_in, ad::Var m_hat, const LossWeights& w);

// Evaluation twins.
double masked_l1(const ad::Tensor& a, const ad::Tensor& b, const ad::Tensor& mask);
double spatial_grad_l1(const ad::Tensor& field);
double laplacian_l1(const ad::Tensor& field);
LossReport loss_wbn(const ad::Tensor& wb_hat, const ad::Tensor& wb_gt, const ad::Tensor& cwb_hat,
                    const ad::Tensor& cwb_gt, const ad::Tensor& in_hat, const ad::Tensor& in_gt,
                    const ad::Tensor& mask, const LossWeights& w);
LossReport loss_smt(const ad::Tensor& cwb_hat, const ad::Tensor& cr_hat, const ad::Tensor& lambda_p,
                    const ad::Tensor& lambda_e, const ad::Tensor& iwb_recon, const ad::Tensor& iwb_in,
                    const ad::Tensor& m_hat, const LossWeights& w);

// Full objectives from network outputs. Ground truth enters as constants.

struct WbnTargets {
  ad::Tensor input;     // I, (3,H,W)
  ad::Tensor kernel;    // WB, (3,H,W)
  ad::Tensor wb_image;  // I_wb, (3,H,W)
  ad::Tensor mask;      // (1,H,W)
};

/// Builds I^_wb = WB^ * I, its chromaticity and intensity, and L_wbn.
Loss wbn_objective(ad::Var wb_hat, const WbnTargets& targets, const LossWeights& w);

struct SmtIntermediates {
  ad::Var reflectance;      // R^ = M^ * T
  ad::Var shading_estimate; // lam_e = sum_c I_wb / max(sum_c R^, eps)
  ad::Var reconstruction;   // I'_wb = R^ * lam_p
};

/// Builds R^, lam_e and I'_wb from the stage-two outputs and the texture,
/// then L_smt. `wb_input` and `texture` must be constants on the tape.
Loss smt_objective(ad::Var m_hat, ad::Var lambda_p, ad::Var wb_input, ad::Var texture, const LossWeights& w,
                   SmtIntermediates* intermediates = nullptr);

}  // namespace dociiw::losses
