#pragma once

// Differentiable primitives. Every op records its result on the tape of its
// operands and accumulates exact gradients on backward.
//
// Element-wise binary ops broadcast rank-3 operands along any axis of size 1
// (a 1-channel map against a 3-channel image, or a scalar against anything).
// Rank-0 scalars are treated as (1, 1, 1).

#include "dociiw/ad/tape.hpp"

namespace dociiw::ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }

Var scale(Var a, float s);
Var add_scalar(Var a, float s);
Var abs(Var a);
/// max(a, lo); gradient passes only where a > lo.
Var clamp_min(Var a, float lo);

Var leaky_relu(Var a, float slope = 0.2f);
/// x * sigmoid(x).
Var silu(Var a);
Var sigmoid(Var a);
Var softplus(Var a);

/// Same-size convolution: x (Ci,H,W), w (Co,Ci,k,k) with odd k, bias (Co).
/// Zero padding k/2, stride 1.
Var conv2d(Var x, Var w, Var bias);
/// 2x2 average pooling; H and W must be even.
Var avg_pool2(Var x);
/// 2x nearest-neighbour upsampling.
Var upsample2(Var x);
/// Channel-axis concatenation of two rank-3 tensors with equal H, W.
Var concat(Var a, Var b);

/// Per-pixel sum over channels: (C,H,W) -> (1,H,W).
Var channel_sum(Var x);
Var sum(Var x);
Var mean(Var x);

/// Forward differences along x: (C,H,W) -> (C,H,W-1).
Var diff_x(Var x);
/// Forward differences along y: (C,H,W) -> (C,H-1,W).
Var diff_y(Var x);
/// 5-point Laplacian on interior pixels: (C,H,W) -> (C,H-2,W-2).
Var laplacian(Var x);

}  // namespace dociiw::ad
