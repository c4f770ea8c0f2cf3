#pragma once

#include "rvf/tensor.hpp"

namespace rvf {

// Elementwise (shapes must match exactly).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, float c);
Tensor mul_scalar(const Tensor& a, float c);
// Multiply by a 1-element tensor with gradient flowing to both arguments
// (learnable temperatures).
Tensor scale_by(const Tensor& a, const Tensor& scalar);

Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);      // exact erf form
Tensor sigmoid(const Tensor& x);
Tensor sqrt_t(const Tensor& x);    // requires x > 0 everywhere
Tensor reciprocal(const Tensor& x);

// Reductions (double accumulation).
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

// Shape plumbing.
Tensor reshape(const Tensor& x, const Shape& s);
Tensor transpose(const Tensor& m);                       // rank-2
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& x, int axis, int start, int len);
// Rank-3 spatial crop / reflect pad (used to round inputs to window multiples).
Tensor crop2d(const Tensor& x, int y0, int x0, int h, int w);
Tensor pad_reflect2d(const Tensor& x, int top, int bottom, int left, int right);

// out[i,j] = m[i,j] + v[j] (bias rows of a linear layer).
Tensor add_rowvec(const Tensor& m, const Tensor& v);
// Per-row (mean, max) summary of a matrix: a[N x M] -> [N x 2].
Tensor row_mean_max(const Tensor& a);
// out[c,h,w] = x[c,h,w] * w[c]; gradient flows to both arguments.
Tensor scale_channels(const Tensor& x, const Tensor& w);

// matmul(a[M x K], b[K x N]) -> [M x N]; mismatched inner extents raise
// ShapeError naming both shapes.
Tensor matmul(const Tensor& a, const Tensor& b);

// Softmax along `axis`, max-subtracted, denominator accumulated in double.
Tensor softmax(const Tensor& x, int axis);

// conv2d on x[C,H,W] with weights w[OC, C/groups, kh, kw] (odd kh/kw),
// cross-correlation semantics, replicate ("clamp") padding chosen so that
// out spatial extent is ceil(H/stride) x ceil(W/stride). bias may be empty.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride = 1, int groups = 1);

// Per-position normalization over channels of x[C,H,W]: mean 0 / variance 1
// (biased variance, eps inside the square root), then per-channel affine.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-6f);

// out(p) = bilinear sample of x at p + flow(p); flow[0] is the x-displacement,
// flow[1] the y-displacement. Out-of-bounds samples clamp to the border.
// Gradients flow to x only (flow comes from a non-differentiable estimator).
Tensor bilinear_warp(const Tensor& x, const Tensor& flow);

// Depth-to-space: x[s*s*C, H, W] -> [C, s*H, s*W].
Tensor pixel_shuffle(const Tensor& x, int s);

}  // namespace rvf
