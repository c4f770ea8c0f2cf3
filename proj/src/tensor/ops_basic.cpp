#include <cmath>
#include <utility>

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
        for (const auto& t : inputs) rg = rg || t.requires_grad();
    n->requires_grad = rg;
    if (rg) {
        for (const auto& t : inputs) n->parents.push_back(t.node());
        n->backward_fn = std::move(backward);
    }
    return Tensor::wrap(std::move(n));
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

void accum(TensorNode& parent, const std::vector<double>& g) {
    if (!parent.requires_grad) return;
    parent.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) parent.grad[i] += static_cast<float>(g[i]);
}

void accum_f(TensorNode& parent, const std::vector<float>& g) {
    if (!parent.requires_grad) return;
    parent.accumulate(g);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<float> out(a.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    return make_op(a.shape(), std::move(out), {a, b}, "add", [](TensorNode& self) {
        accum_f(*self.parents[0], self.grad);
        accum_f(*self.parents[1], self.grad);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<float> out(a.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    return make_op(a.shape(), std::move(out), {a, b}, "sub", [](TensorNode& self) {
        accum_f(*self.parents[0], self.grad);
        if (self.parents[1]->requires_grad) {
            auto& p = *self.parents[1];
            p.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<float> out(a.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    return make_op(a.shape(), std::move(out), {a, b}, "mul", [](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                pa.grad[i] += self.grad[i] * pb.data[i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                pb.grad[i] += self.grad[i] * pa.data[i];
        }
    });
}

Tensor add_scalar(const Tensor& a, float c) {
    std::vector<float> out(a.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + c;
    return make_op(a.shape(), std::move(out), {a},
                   "add_scalar", [](TensorNode& self) { accum_f(*self.parents[0], self.grad); });
}

Tensor mul_scalar(const Tensor& a, float c) {
    std::vector<float> out(a.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
    return make_op(a.shape(), std::move(out), {a}, "mul_scalar", [c](TensorNode& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i] * c;
    });
}

Tensor scale_by(const Tensor& a, const Tensor& scalar) {
    if (scalar.numel() != 1)
        throw ShapeError("scale_by: scale must be a 1-element tensor, got " +
                         shape_str(scalar.shape()));
    const float s = scalar.data()[0];
    std::vector<float> out(a.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * s;
    return make_op(a.shape(), std::move(out), {a, scalar}, "scale_by", [s](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& ps = *self.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * s;
        }
        if (ps.requires_grad) {
            double acc = 0.0;
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                acc += static_cast<double>(self.grad[i]) * pa.data[i];
            ps.ensure_grad();
            ps.grad[0] += static_cast<float>(acc);
        }
    });
}

Tensor relu(const Tensor& x) {
    std::vector<float> out(x.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] > 0.0f ? x.data()[i] : 0.0f;
    return make_op(x.shape(), std::move(out), {x}, "relu", [](TensorNode& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (p.data[i] > 0.0f) p.grad[i] += self.grad[i];
    });
}

Tensor gelu(const Tensor& x) {
    std::vector<float> out(x.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = x.data()[i];
        out[i] = static_cast<float>(0.5 * v * (1.0 + std::erf(v * M_SQRT1_2)));
    }
    return make_op(x.shape(), std::move(out), {x}, "gelu", [](TensorNode& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double v = p.data[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
            const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI);
            p.grad[i] += self.grad[i] * static_cast<float>(cdf + v * pdf);
        }
    });
}

Tensor sigmoid(const Tensor& x) {
    std::vector<float> out(x.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = x.data()[i];
        const double y = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        out[i] = static_cast<float>(y);
    }
    return make_op(x.shape(), std::move(out), {x}, "sigmoid", [](TensorNode& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const float y = self.data[i];
            p.grad[i] += self.grad[i] * y * (1.0f - y);
        }
    });
}

Tensor sqrt_t(const Tensor& x) {
    std::vector<float> out(x.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (x.data()[i] <= 0.0f) throw ParamError("sqrt_t requires strictly positive input");
        out[i] = std::sqrt(x.data()[i]);
    }
    return make_op(x.shape(), std::move(out), {x}, "sqrt", [](TensorNode& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            p.grad[i] += self.grad[i] * 0.5f / self.data[i];
    });
}

Tensor reciprocal(const Tensor& x) {
    std::vector<float> out(x.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (std::fabs(x.data()[i]) < 1e-20f) throw ParamError("reciprocal of (near) zero");
        out[i] = 1.0f / x.data()[i];
    }
    return make_op(x.shape(), std::move(out), {x}, "reciprocal", [](TensorNode& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const float y = self.data[i];
            p.grad[i] -= self.grad[i] * y * y;
        }
    });
}

Tensor sum_all(const Tensor& x) {
    double acc = 0.0;
    for (float v : x.data()) acc += v;
    return make_op({1}, {static_cast<float>(acc)}, {x}, "sum_all", [](TensorNode& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        const float g = self.grad[0];
        for (auto& gv : p.grad) gv += g;
    });
}

Tensor mean_all(const Tensor& x) {
    double acc = 0.0;
    for (float v : x.data()) acc += v;
    const auto n = static_cast<double>(x.numel());
    return make_op({1}, {static_cast<float>(acc / n)}, {x}, "mean_all", [n](TensorNode& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        const float g = static_cast<float>(self.grad[0] / n);
        for (auto& gv : p.grad) gv += g;
    });
}

Tensor reshape(const Tensor& x, const Shape& s) {
    if (numel_of(s) != x.numel())
        throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(s));
    std::vector<float> out = x.data();
    return make_op(s, std::move(out), {x},
                   "reshape", [](TensorNode& self) { accum_f(*self.parents[0], self.grad); });
}

Tensor transpose(const Tensor& m) {
    if (m.rank() != 2) throw ShapeError("transpose expects rank-2, got " + shape_str(m.shape()));
    const int r = m.extent(0), c = m.extent(1);
    std::vector<float> out(static_cast<std::size_t>(r) * c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            out[static_cast<std::size_t>(j) * r + i] = m.data()[static_cast<std::size_t>(i) * c + j];
    return make_op({c, r}, std::move(out), {m}, "transpose", [r, c](TensorNode& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                p.grad[static_cast<std::size_t>(i) * c + j] +=
                    self.grad[static_cast<std::size_t>(j) * r + i];
    });
}

namespace {
// Decompose a shape around `axis` into outer / axis / inner extents.
struct AxisView {
    std::int64_t outer = 1, n = 1, inner = 1;
};
AxisView axis_view(const Shape& s, int axis) {
    if (axis < 0 || axis >= static_cast<int>(s.size()))
        throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    AxisView v;
    for (int i = 0; i < axis; ++i) v.outer *= s[static_cast<std::size_t>(i)];
    v.n = s[static_cast<std::size_t>(axis)];
    for (int i = axis + 1; i < static_cast<int>(s.size()); ++i)
        v.inner *= s[static_cast<std::size_t>(i)];
    return v;
}
}  // namespace

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ShapeError("concat of zero tensors");
    const Shape& first = parts[0].shape();
    Shape out_shape = first;
    int total = 0;
    for (const auto& p : parts) {
        if (p.rank() != static_cast<int>(first.size()))
            throw ShapeError("concat: rank mismatch " + shape_str(first) + " vs " +
                             shape_str(p.shape()));
        for (int i = 0; i < p.rank(); ++i)
            if (i != axis && p.shape()[static_cast<std::size_t>(i)] != first[static_cast<std::size_t>(i)])
                throw ShapeError("concat: extent mismatch " + shape_str(first) + " vs " +
                                 shape_str(p.shape()));
        total += p.extent(axis);
    }
    out_shape[static_cast<std::size_t>(axis)] = total;
    const AxisView ov = axis_view(out_shape, axis);
    std::vector<float> out(static_cast<std::size_t>(numel_of(out_shape)));
    std::vector<int> offsets;
    int off = 0;
    for (const auto& p : parts) {
        offsets.push_back(off);
        const AxisView pv = axis_view(p.shape(), axis);
        for (std::int64_t o = 0; o < pv.outer; ++o)
            for (std::int64_t a = 0; a < pv.n; ++a) {
                const float* src = p.data().data() + (o * pv.n + a) * pv.inner;
                float* dst = out.data() + (o * ov.n + off + a) * ov.inner;
                std::copy(src, src + pv.inner, dst);
            }
        off += static_cast<int>(pv.n);
    }
    return make_op(out_shape, std::move(out), parts, "concat",
                   [axis, ov, offsets](TensorNode& self) {
                       for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
                           auto& p = *self.parents[pi];
                           if (!p.requires_grad) continue;
                           p.ensure_grad();
                           const AxisView pv = axis_view(p.shape, axis);
                           const int o0 = offsets[pi];
                           for (std::int64_t o = 0; o < pv.outer; ++o)
                               for (std::int64_t a = 0; a < pv.n; ++a) {
                                   const float* src = self.grad.data() + (o * ov.n + o0 + a) * ov.inner;
                                   float* dst = p.grad.data() + (o * pv.n + a) * pv.inner;
                                   for (std::int64_t i = 0; i < pv.inner; ++i) dst[i] += src[i];
                               }
                       }
                   });
}

Tensor slice(const Tensor& x, int axis, int start, int len) {
    const AxisView v = axis_view(x.shape(), axis);
    if (start < 0 || len <= 0 || start + len > v.n)
        throw ShapeError("slice [" + std::to_string(start) + "," + std::to_string(start + len) +
                         ") out of range for axis " + std::to_string(axis) + " of " +
                         shape_str(x.shape()));
    Shape out_shape = x.shape();
    out_shape[static_cast<std::size_t>(axis)] = len;
    std::vector<float> out(static_cast<std::size_t>(v.outer * len * v.inner));
    for (std::int64_t o = 0; o < v.outer; ++o)
        for (int a = 0; a < len; ++a) {
            const float* src = x.data().data() + (o * v.n + start + a) * v.inner;
            float* dst = out.data() + (o * len + a) * v.inner;
            std::copy(src, src + v.inner, dst);
        }
    return make_op(out_shape, std::move(out), {x}, "slice", [v, start, len](TensorNode& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::int64_t o = 0; o < v.outer; ++o)
            for (int a = 0; a < len; ++a) {
                const float* src = self.grad.data() + (o * len + a) * v.inner;
                float* dst = p.grad.data() + (o * v.n + start + a) * v.inner;
                for (std::int64_t i = 0; i < v.inner; ++i) dst[i] += src[i];
            }
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul expects rank-2 operands, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    const int m = a.extent(0), k = a.extent(1), k2 = b.extent(0), n = b.extent(1);
    if (k != k2)
        throw ShapeError("matmul: inner extents disagree, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    std::vector<float> out(static_cast<std::size_t>(m) * n);
    const float* pa = a.data().data();
    const float* pb = b.data().data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t)
                acc += static_cast<double>(pa[i * k + t]) * pb[t * n + j];
            out[static_cast<std::size_t>(i) * n + j] = static_cast<float>(acc);
        }
    return make_op({m, n}, std::move(out), {a, b}, "matmul", [m, k, n](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            std::vector<double> da(static_cast<std::size_t>(m) * k, 0.0);
            for (int i = 0; i < m; ++i)
                for (int t = 0; t < k; ++t) {
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j)
                        acc += static_cast<double>(self.grad[i * n + j]) * pb.data[t * n + j];
                    da[static_cast<std::size_t>(i) * k + t] = acc;
                }
            accum(pa, da);
        }
        if (pb.requires_grad) {
            std::vector<double> db(static_cast<std::size_t>(k) * n, 0.0);
            for (int t = 0; t < k; ++t)
                for (int j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < m; ++i)
                        acc += static_cast<double>(pa.data[i * k + t]) * self.grad[i * n + j];
                    db[static_cast<std::size_t>(t) * n + j] = acc;
                }
            accum(pb, db);
        }
    });
}

Tensor softmax(const Tensor& x, int axis) {
    const AxisView v = axis_view(x.shape(), axis);
    std::vector<float> out(x.data().size());
    for (std::int64_t o = 0; o < v.outer; ++o)
        for (std::int64_t i = 0; i < v.inner; ++i) {
            const std::int64_t base = o * v.n * v.inner + i;
            float mx = x.data()[static_cast<std::size_t>(base)];
            for (std::int64_t a = 1; a < v.n; ++a)
                mx = std::max(mx, x.data()[static_cast<std::size_t>(base + a * v.inner)]);
            double denom = 0.0;
            for (std::int64_t a = 0; a < v.n; ++a) {
                const float e =
                    std::exp(x.data()[static_cast<std::size_t>(base + a * v.inner)] - mx);
                out[static_cast<std::size_t>(base + a * v.inner)] = e;
                denom += e;
            }
            for (std::int64_t a = 0; a < v.n; ++a)
                out[static_cast<std::size_t>(base + a * v.inner)] =
                    static_cast<float>(out[static_cast<std::size_t>(base + a * v.inner)] / denom);
        }
    return make_op(x.shape(), std::move(out), {x}, "softmax", [v](TensorNode& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::int64_t o = 0; o < v.outer; ++o)
            for (std::int64_t i = 0; i < v.inner; ++i) {
                const std::int64_t base = o * v.n * v.inner + i;
                double dot = 0.0;
                for (std::int64_t a = 0; a < v.n; ++a) {
                    const std::size_t idx = static_cast<std::size_t>(base + a * v.inner);
                    dot += static_cast<double>(self.grad[idx]) * self.data[idx];
                }
                for (std::int64_t a = 0; a < v.n; ++a) {
                    const std::size_t idx = static_cast<std::size_t>(base + a * v.inner);
                    p.grad[idx] += static_cast<float>(
                        self.data[idx] * (static_cast<double>(self.grad[idx]) - dot));
                }
            }
    });
}

Tensor crop2d(const Tensor& x, int y0, int x0, int h, int w) {
    if (x.rank() != 3) throw ShapeError("crop2d expects rank-3, got " + shape_str(x.shape()));
    const int c = x.extent(0), hh = x.extent(1), ww = x.extent(2);
    if (y0 < 0 || x0 < 0 || h <= 0 || w <= 0 || y0 + h > hh || x0 + w > ww)
        throw ShapeError("crop2d window out of range for " + shape_str(x.shape()));
    std::vector<float> out(static_cast<std::size_t>(c) * h * w);
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y) {
            const float* src = x.data().data() + (static_cast<std::size_t>(ci) * hh + y0 + y) * ww + x0;
            std::copy(src, src + w, out.data() + (static_cast<std::size_t>(ci) * h + y) * w);
        }
    return make_op({c, h, w}, std::move(out), {x}, "crop2d",
                   [y0, x0, h, w, hh, ww, c](TensorNode& self) {
                       auto& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       p.ensure_grad();
                       for (int ci = 0; ci < c; ++ci)
                           for (int y = 0; y < h; ++y) {
                               const float* src =
                                   self.grad.data() + (static_cast<std::size_t>(ci) * h + y) * w;
                               float* dst = p.grad.data() +
                                            (static_cast<std::size_t>(ci) * hh + y0 + y) * ww + x0;
                               for (int xw = 0; xw < w; ++xw) dst[xw] += src[xw];
                           }
                   });
}

namespace {
inline int reflect101(int i, int n) {
    // gfedcb|abcdefgh|gfedcba
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}
}  // namespace

Tensor pad_reflect2d(const Tensor& x, int top, int bottom, int left, int right) {
    if (x.rank() != 3) throw ShapeError("pad_reflect2d expects rank-3, got " + shape_str(x.shape()));
    if (top < 0 || bottom < 0 || left < 0 || right < 0)
        throw ParamError("pad_reflect2d: negative padding");
    const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
    const int oh = h + top + bottom, ow = w + left + right;
    std::vector<float> out(static_cast<std::size_t>(c) * oh * ow);
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < oh; ++y) {
            const int sy = reflect101(y - top, h);
            for (int xw = 0; xw < ow; ++xw) {
                const int sx = reflect101(xw - left, w);
                out[(static_cast<std::size_t>(ci) * oh + y) * ow + xw] =
                    x.data()[(static_cast<std::size_t>(ci) * h + sy) * w + sx];
            }
        }
    return make_op({c, oh, ow}, std::move(out), {x}, "pad_reflect2d",
                   [top, left, c, h, w, oh, ow](TensorNode& self) {
                       auto& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       p.ensure_grad();
                       for (int ci = 0; ci < c; ++ci)
                           for (int y = 0; y < oh; ++y) {
                               const int sy = reflect101(y - top, h);
                               for (int xw = 0; xw < ow; ++xw) {
                                   const int sx = reflect101(xw - left, w);
                                   p.grad[(static_cast<std::size_t>(ci) * h + sy) * w + sx] +=
                                       self.grad[(static_cast<std::size_t>(ci) * oh + y) * ow + xw];
                               }
                           }
                   });
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
    if (m.rank() != 2 || v.rank() != 1 || v.extent(0) != m.extent(1))
        throw ShapeError("add_rowvec: need m[NxM] and v[M], got " + shape_str(m.shape()) +
                         " and " + shape_str(v.shape()));
    const int n = m.extent(0), k = m.extent(1);
    std::vector<float> out(m.data().size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j)
            out[static_cast<std::size_t>(i) * k + j] =
                m.data()[static_cast<std::size_t>(i) * k + j] + v.data()[static_cast<std::size_t>(j)];
    return make_op(m.shape(), std::move(out), {m, v}, "add_rowvec", [n, k](TensorNode& self) {
        auto& pm = *self.parents[0];
        auto& pv = *self.parents[1];
        if (pm.requires_grad) pm.accumulate(self.grad);
        if (pv.requires_grad) {
            std::vector<double> dv(static_cast<std::size_t>(k), 0.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < k; ++j)
                    dv[static_cast<std::size_t>(j)] += self.grad[static_cast<std::size_t>(i) * k + j];
            accum(pv, dv);
        }
    });
}

Tensor row_mean_max(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("row_mean_max expects rank-2, got " + shape_str(a.shape()));
    const int n = a.extent(0), m = a.extent(1);
    std::vector<float> out(static_cast<std::size_t>(n) * 2);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        float mx = a.data()[static_cast<std::size_t>(i) * m];
        for (int j = 0; j < m; ++j) {
            const float x = a.data()[static_cast<std::size_t>(i) * m + j];
            acc += x;
            mx = std::max(mx, x);
        }
        out[static_cast<std::size_t>(i) * 2] = static_cast<float>(acc / m);
        out[static_cast<std::size_t>(i) * 2 + 1] = mx;
    }
    return make_op({n, 2}, std::move(out), {a}, "row_mean_max", [n, m](TensorNode& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int i = 0; i < n; ++i) {
            const float gmean = self.grad[static_cast<std::size_t>(i) * 2] / m;
            const float gmax = self.grad[static_cast<std::size_t>(i) * 2 + 1];
            int arg = 0;
            for (int j = 1; j < m; ++j)
                if (p.data[static_cast<std::size_t>(i) * m + j] >
                    p.data[static_cast<std::size_t>(i) * m + arg])
                    arg = j;
            for (int j = 0; j < m; ++j) p.grad[static_cast<std::size_t>(i) * m + j] += gmean;
            p.grad[static_cast<std::size_t>(i) * m + arg] += gmax;
        }
    });
}

Tensor scale_channels(const Tensor& x, const Tensor& w) {
    if (x.rank() != 3 || w.rank() != 1 || w.extent(0) != x.extent(0))
        throw ShapeError("scale_channels: need x[CxHxW] and w[C], got " + shape_str(x.shape()) +
                         " and " + shape_str(w.shape()));
    const int c = x.extent(0);
    const std::size_t hw = static_cast<std::size_t>(x.extent(1)) * x.extent(2);
    std::vector<float> out(x.data().size());
    for (int ci = 0; ci < c; ++ci)
        for (std::size_t p = 0; p < hw; ++p)
            out[static_cast<std::size_t>(ci) * hw + p] =
                x.data()[static_cast<std::size_t>(ci) * hw + p] * w.data()[static_cast<std::size_t>(ci)];
    return make_op(x.shape(), std::move(out), {x, w}, "scale_channels", [c, hw](TensorNode& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        if (px.requires_grad) {
            px.ensure_grad();
            for (int ci = 0; ci < c; ++ci)
                for (std::size_t p = 0; p < hw; ++p)
                    px.grad[static_cast<std::size_t>(ci) * hw + p] +=
                        self.grad[static_cast<std::size_t>(ci) * hw + p] *
                        pw.data[static_cast<std::size_t>(ci)];
        }
        if (pw.requires_grad) {
            std::vector<double> dw(static_cast<std::size_t>(c), 0.0);
            for (int ci = 0; ci < c; ++ci)
                for (std::size_t p = 0; p < hw; ++p)
                    dw[static_cast<std::size_t>(ci)] +=
                        static_cast<double>(self.grad[static_cast<std::size_t>(ci) * hw + p]) *
                        px.data[static_cast<std::size_t>(ci) * hw + p];
            accum(pw, dw);
        }
    });
}

}  // namespace rvf
