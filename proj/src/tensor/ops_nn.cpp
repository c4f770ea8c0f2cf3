#include <algorithm>
#include <cmath>

#include "rvf/ops.hpp"

namespace rvf {

namespace {

using detail::TensorNode;

Tensor make_op(Shape shape, std::vector<float> data, const std::vector<Tensor>& inputs,
               const char* op, std::function<void(TensorNode&)> backward) {
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->op = op;
    bool rg = false;
    if (grad_enabled())
        for (const auto& t : inputs) rg = rg || (t.defined() && t.requires_grad());
    n->requires_grad = rg;
    if (rg) {
        for (const auto& t : inputs)
            if (t.defined()) n->parents.push_back(t.node());
        n->backward_fn = std::move(backward);
    }
    return Tensor::wrap(std::move(n));
}

void accum(TensorNode& parent, const std::vector<double>& g) {
    if (!parent.requires_grad) return;
    parent.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) parent.grad[i] += static_cast<float>(g[i]);
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int groups) {
    if (x.rank() != 3 || w.rank() != 4)
        throw ShapeError("conv2d expects x[C,H,W], w[OC,Cg,kh,kw]; got " + shape_str(x.shape()) +
                         " and " + shape_str(w.shape()));
    const int c = x.extent(0), h = x.extent(1), ww_ = x.extent(2);
    const int oc = w.extent(0), cg = w.extent(1), kh = w.extent(2), kw = w.extent(3);
    if (stride < 1) throw ParamError("conv2d: stride must be >= 1");
    if (groups < 1 || c % groups != 0 || oc % groups != 0 || cg != c / groups)
        throw ShapeError("conv2d: group mismatch, x " + shape_str(x.shape()) + " w " +
                         shape_str(w.shape()) + " groups " + std::to_string(groups));
    if (kh % 2 == 0 || kw % 2 == 0) throw ParamError("conv2d: kernel extents must be odd");
    if (bias.defined() && (bias.rank() != 1 || bias.extent(0) != oc))
        throw ShapeError("conv2d: bias must be [OC], got " + shape_str(bias.shape()));

    const int pad_y = kh / 2, pad_x = kw / 2;
    const int ho = (h + stride - 1) / stride, wo = (ww_ + stride - 1) / stride;
    const int ocg = oc / groups;
    std::vector<float> out(static_cast<std::size_t>(oc) * ho * wo);
    const float* px = x.data().data();
    const float* pw = w.data().data();
    const float* pb = bias.defined() ? bias.data().data() : nullptr;
    for (int o = 0; o < oc; ++o) {
        const int g = o / ocg;
        const int cin0 = g * cg;
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox) {
                double acc = pb ? pb[o] : 0.0;
                for (int ic = 0; ic < cg; ++ic) {
                    const float* xc = px + static_cast<std::size_t>(cin0 + ic) * h * ww_;
                    const float* wc =
                        pw + ((static_cast<std::size_t>(o) * cg + ic) * kh) * kw;
                    for (int ky = 0; ky < kh; ++ky) {
                        const int iy = clampi(oy * stride - pad_y + ky, 0, h - 1);
                        for (int kx = 0; kx < kw; ++kx) {
                            const int ix = clampi(ox * stride - pad_x + kx, 0, ww_ - 1);
                            acc += static_cast<double>(wc[ky * kw + kx]) * xc[iy * ww_ + ix];
                        }
                    }
                }
                out[(static_cast<std::size_t>(o) * ho + oy) * wo + ox] = static_cast<float>(acc);
            }
    }
    const bool has_bias = bias.defined();
    return make_op(
        {oc, ho, wo}, std::move(out), {x, w, bias}, "conv2d",
        [c, h, ww_, oc, cg, kh, kw, stride, groups, ho, wo, has_bias](TensorNode& self) {
            auto& pxn = *self.parents[0];
            auto& pwn = *self.parents[1];
            TensorNode* pbn = has_bias ? self.parents[2].get() : nullptr;
            const bool need_dx = pxn.requires_grad;
            const bool need_dw = pwn.requires_grad;
            const bool need_db = pbn && pbn->requires_grad;
            const int pad_y = kh / 2, pad_x = kw / 2, ocg = oc / groups;
            std::vector<double> dx(need_dx ? pxn.data.size() : 0, 0.0);
            std::vector<double> dw(need_dw ? pwn.data.size() : 0, 0.0);
            std::vector<double> db(need_db ? static_cast<std::size_t>(oc) : 0, 0.0);
            for (int o = 0; o < oc; ++o) {
                const int cin0 = (o / ocg) * cg;
                for (int oy = 0; oy < ho; ++oy)
                    for (int ox = 0; ox < wo; ++ox) {
                        const double g =
                            self.grad[(static_cast<std::size_t>(o) * ho + oy) * wo + ox];
                        if (g == 0.0) continue;
                        if (need_db) db[static_cast<std::size_t>(o)] += g;
                        for (int ic = 0; ic < cg; ++ic) {
                            const std::size_t xbase = static_cast<std::size_t>(cin0 + ic) * h * ww_;
                            const std::size_t wbase =
                                (static_cast<std::size_t>(o) * cg + ic) * kh * kw;
                            for (int ky = 0; ky < kh; ++ky) {
                                const int iy = clampi(oy * stride - pad_y + ky, 0, h - 1);
                                for (int kx = 0; kx < kw; ++kx) {
                                    const int ix = clampi(ox * stride - pad_x + kx, 0, ww_ - 1);
                                    if (need_dx)
                                        dx[xbase + static_cast<std::size_t>(iy) * ww_ + ix] +=
                                            pwn.data[wbase + static_cast<std::size_t>(ky) * kw + kx] * g;
                                    if (need_dw)
                                        dw[wbase + static_cast<std::size_t>(ky) * kw + kx] +=
                                            pxn.data[xbase + static_cast<std::size_t>(iy) * ww_ + ix] * g;
                                }
                            }
                        }
                    }
            }
            if (need_dx) accum(pxn, dx);
            if (need_dw) accum(pwn, dw);
            if (need_db) accum(*pbn, db);
        });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
    if (x.rank() != 3) throw ShapeError("layer_norm expects x[C,H,W], got " + shape_str(x.shape()));
    const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
    if (gamma.rank() != 1 || gamma.extent(0) != c || beta.rank() != 1 || beta.extent(0) != c)
        throw ShapeError("layer_norm: affine params must be [C] for x " + shape_str(x.shape()));
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    std::vector<float> out(x.data().size());
    auto mu = std::make_shared<std::vector<double>>(hw);
    auto inv = std::make_shared<std::vector<double>>(hw);
    const float* px = x.data().data();
    for (std::size_t p = 0; p < hw; ++p) {
        double m = 0.0;
        for (int ci = 0; ci < c; ++ci) m += px[static_cast<std::size_t>(ci) * hw + p];
        m /= c;
        double v = 0.0;
        for (int ci = 0; ci < c; ++ci) {
            const double d = px[static_cast<std::size_t>(ci) * hw + p] - m;
            v += d * d;
        }
        v /= c;
        (*mu)[p] = m;
        (*inv)[p] = 1.0 / std::sqrt(v + static_cast<double>(eps));
        for (int ci = 0; ci < c; ++ci) {
            const double xhat = (px[static_cast<std::size_t>(ci) * hw + p] - m) * (*inv)[p];
            out[static_cast<std::size_t>(ci) * hw + p] =
                static_cast<float>(xhat * gamma.data()[static_cast<std::size_t>(ci)] +
                                   beta.data()[static_cast<std::size_t>(ci)]);
        }
    }
    return make_op({c, h, w}, std::move(out), {x, gamma, beta}, "layer_norm",
                   [c, hw, mu, inv](TensorNode& self) {
                       auto& pxn = *self.parents[0];
                       auto& pgn = *self.parents[1];
                       auto& pbn = *self.parents[2];
                       std::vector<double> dgamma(static_cast<std::size_t>(c), 0.0);
                       std::vector<double> dbeta(static_cast<std::size_t>(c), 0.0);
                       const bool need_dx = pxn.requires_grad;
                       if (need_dx) pxn.ensure_grad();
                       for (std::size_t p = 0; p < hw; ++p) {
                           const double m = (*mu)[p], iv = (*inv)[p];
                           double m1 = 0.0, m2 = 0.0;
                           for (int ci = 0; ci < c; ++ci) {
                               const std::size_t idx = static_cast<std::size_t>(ci) * hw + p;
                               const double g = self.grad[idx];
                               const double xhat = (pxn.data[idx] - m) * iv;
                               dgamma[static_cast<std::size_t>(ci)] += g * xhat;
                               dbeta[static_cast<std::size_t>(ci)] += g;
                               const double dxhat = g * pgn.data[static_cast<std::size_t>(ci)];
                               m1 += dxhat;
                               m2 += dxhat * xhat;
                           }
                           if (!need_dx) continue;
                           m1 /= c;
                           m2 /= c;
                           for (int ci = 0; ci < c; ++ci) {
                               const std::size_t idx = static_cast<std::size_t>(ci) * hw + p;
                               const double xhat = (pxn.data[idx] - m) * iv;
                               const double dxhat =
                                   static_cast<double>(self.grad[idx]) *
                                   pgn.data[static_cast<std::size_t>(ci)];
                               pxn.grad[idx] +=
                                   static_cast<float>(iv * (dxhat - m1 - xhat * m2));
                           }
                       }
                       accum(pgn, dgamma);
                       accum(pbn, dbeta);
                   });
}

Tensor bilinear_warp(const Tensor& x, const Tensor& flow) {
    if (x.rank() != 3 || flow.rank() != 3 || flow.extent(0) != 2 ||
        flow.extent(1) != x.extent(1) || flow.extent(2) != x.extent(2))
        throw ShapeError("bilinear_warp: x " + shape_str(x.shape()) + " needs flow [2,H,W], got " +
                         shape_str(flow.shape()));
    const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    std::vector<float> out(x.data().size());
    const float* px = x.data().data();
    const float* pf = flow.data().data();
    for (int y = 0; y < h; ++y)
        for (int xw = 0; xw < w; ++xw) {
            const std::size_t p = static_cast<std::size_t>(y) * w + xw;
            float sx = xw + pf[p];
            float sy = y + pf[hw + p];
            sx = std::min(std::max(sx, 0.0f), static_cast<float>(w - 1));
            sy = std::min(std::max(sy, 0.0f), static_cast<float>(h - 1));
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const int x1 = std::min(x0 + 1, w - 1);
            const int y1 = std::min(y0 + 1, h - 1);
            const float fx = sx - x0, fy = sy - y0;
            for (int ci = 0; ci < c; ++ci) {
                const float* xc = px + static_cast<std::size_t>(ci) * hw;
                const float v00 = xc[static_cast<std::size_t>(y0) * w + x0];
                const float v01 = xc[static_cast<std::size_t>(y0) * w + x1];
                const float v10 = xc[static_cast<std::size_t>(y1) * w + x0];
                const float v11 = xc[static_cast<std::size_t>(y1) * w + x1];
                out[static_cast<std::size_t>(ci) * hw + p] =
                    (1.0f - fy) * ((1.0f - fx) * v00 + fx * v01) +
                    fy * ((1.0f - fx) * v10 + fx * v11);
            }
        }
    return make_op({c, h, w}, std::move(out), {x, flow}, "bilinear_warp",
                   [c, h, w, hw](TensorNode& self) {
                       auto& pxn = *self.parents[0];
                       auto& pfn = *self.parents[1];
                       if (!pxn.requires_grad) return;
                       pxn.ensure_grad();
                       for (int y = 0; y < h; ++y)
                           for (int xw = 0; xw < w; ++xw) {
                               const std::size_t p = static_cast<std::size_t>(y) * w + xw;
                               float sx = xw + pfn.data[p];
                               float sy = y + pfn.data[hw + p];
                               sx = std::min(std::max(sx, 0.0f), static_cast<float>(w - 1));
                               sy = std::min(std::max(sy, 0.0f), static_cast<float>(h - 1));
                               const int x0 = static_cast<int>(std::floor(sx));
                               const int y0 = static_cast<int>(std::floor(sy));
                               const int x1 = std::min(x0 + 1, w - 1);
                               const int y1 = std::min(y0 + 1, h - 1);
                               const float fx = sx - x0, fy = sy - y0;
                               for (int ci = 0; ci < c; ++ci) {
                                   const float g = self.grad[static_cast<std::size_t>(ci) * hw + p];
                                   if (g == 0.0f) continue;
                                   float* gc = pxn.grad.data() + static_cast<std::size_t>(ci) * hw;
                                   gc[static_cast<std::size_t>(y0) * w + x0] +=
                                       g * (1.0f - fy) * (1.0f - fx);
                                   gc[static_cast<std::size_t>(y0) * w + x1] += g * (1.0f - fy) * fx;
                                   gc[static_cast<std::size_t>(y1) * w + x0] += g * fy * (1.0f - fx);
                                   gc[static_cast<std::size_t>(y1) * w + x1] += g * fy * fx;
                               }
                           }
                   });
}

Tensor pixel_shuffle(const Tensor& x, int s) {
    if (x.rank() != 3) throw ShapeError("pixel_shuffle expects rank-3, got " + shape_str(x.shape()));
    if (s < 1) throw ParamError("pixel_shuffle: scale must be >= 1");
    const int cin = x.extent(0), h = x.extent(1), w = x.extent(2);
    if (cin % (s * s) != 0)
        throw ShapeError("pixel_shuffle: channels of " + shape_str(x.shape()) +
                         " not divisible by " + std::to_string(s * s));
    const int c = cin / (s * s);
    const int oh = h * s, ow = w * s;
    std::vector<float> out(x.data().size());
    const float* px = x.data().data();
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < oh; ++y)
            for (int xw = 0; xw < ow; ++xw) {
                const int src_c = ci * s * s + (y % s) * s + (xw % s);
                out[(static_cast<std::size_t>(ci) * oh + y) * ow + xw] =
                    px[(static_cast<std::size_t>(src_c) * h + y / s) * w + xw / s];
            }
    return make_op({c, oh, ow}, std::move(out), {x}, "pixel_shuffle",
                   [c, h, w, s, oh, ow](TensorNode& self) {
                       auto& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       p.ensure_grad();
                       for (int ci = 0; ci < c; ++ci)
                           for (int y = 0; y < oh; ++y)
                               for (int xw = 0; xw < ow; ++xw) {
                                   const int src_c = ci * s * s + (y % s) * s + (xw % s);
                                   p.grad[(static_cast<std::size_t>(src_c) * h + y / s) * w + xw / s] +=
                                       self.grad[(static_cast<std::size_t>(ci) * oh + y) * ow + xw];
                               }
                   });
}

}  // namespace rvf
