#include "rvf/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "rvf/common.hpp"
#include "rvf/prng.hpp"

namespace rvf {

namespace {

void check_image(const Tensor& img, const char* who) {
    if (img.rank() != 3) {
        throw ShapeError(std::string(who) + " expects a [C,H,W] image, got rank " +
                         std::to_string(img.rank()));
    }
}

inline double clip01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

inline std::size_t clampi(long i, long n) {
    if (i < 0) i = 0;
    if (i >= n) i = n - 1;
    return static_cast<std::size_t>(i);
}

}  // namespace

std::vector<double> gaussian_kernel(double sigma) {
    if (sigma < 0.0) {
        throw ParamError("gaussian_kernel: sigma must be >= 0, got " +
                         std::to_string(sigma));
    }
    if (sigma == 0.0) return {1.0};
    const long r = static_cast<long>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    double sum = 0.0;
    for (long i = -r; i <= r; ++i) {
        const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(i + r)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

Tensor gaussian_blur(const Tensor& img, double sigma) {
    check_image(img, "gaussian_blur");
    if (sigma < 0.0) {
        throw ParamError("gaussian_blur: sigma must be >= 0, got " +
                         std::to_string(sigma));
    }
    if (sigma == 0.0) return img;
    const std::vector<double> k = gaussian_kernel(sigma);
    const long r = static_cast<long>(k.size() / 2);
    const long c = static_cast<long>(img.shape()[0]);
    const long h = static_cast<long>(img.shape()[1]);
    const long w = static_cast<long>(img.shape()[2]);
    const float* src = img.data().data();

    // Horizontal pass in double, then vertical, replicate at both borders.
    std::vector<double> tmp(static_cast<std::size_t>(c * h * w));
    for (long ch = 0; ch < c; ++ch) {
        const float* plane = src + ch * h * w;
        double* tplane = tmp.data() + ch * h * w;
        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
                double acc = 0.0;
                for (long i = -r; i <= r; ++i) {
                    acc += k[static_cast<std::size_t>(i + r)] *
                           plane[y * w + static_cast<long>(clampi(x + i, w))];
                }
                tplane[y * w + x] = acc;
            }
        }
    }
    std::vector<float> out(tmp.size());
    for (long ch = 0; ch < c; ++ch) {
        const double* tplane = tmp.data() + ch * h * w;
        float* oplane = out.data() + ch * h * w;
        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
                double acc = 0.0;
                for (long i = -r; i <= r; ++i) {
                    acc += k[static_cast<std::size_t>(i + r)] *
                           tplane[static_cast<long>(clampi(y + i, h)) * w + x];
                }
                oplane[y * w + x] = static_cast<float>(acc);
            }
        }
    }
    return Tensor::from_data(img.shape(), std::move(out));
}

Tensor add_gaussian_noise(const Tensor& img, double sigma, std::uint64_t seed) {
    check_image(img, "add_gaussian_noise");
    if (sigma < 0.0) {
        throw ParamError("add_gaussian_noise: sigma must be >= 0, got " +
                         std::to_string(sigma));
    }
    if (sigma == 0.0) return img;
    const std::vector<float>& src = img.data();
    std::vector<float> out(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double v = static_cast<double>(src[i]) +
                         sigma * prng_normal(seed, static_cast<std::uint64_t>(i));
        out[i] = static_cast<float>(clip01(v));
    }
    return Tensor::from_data(img.shape(), std::move(out));
}

// ---------------------------------------------------------------------------
// Block-transform compression
// ---------------------------------------------------------------------------

namespace {

// Base quantization tables (Annex K of the JPEG standard), row-major 8x8.
const int kLumaBase[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};
const int kChromaBase[64] = {
    17, 18, 24, 47, 99, 99, 99, 99,  //
    18, 21, 26, 66, 99, 99, 99, 99,  //
    24, 26, 56, 99, 99, 99, 99, 99,  //
    47, 66, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99};

struct DctTables {
    // cosv[u][x] = C(u) * cos((2x+1) u pi / 16) / 2, so the 2-D transform is
    // orthonormal when applied along rows then columns.
    double cosv[8][8];
    DctTables() {
        const double pi = std::acos(-1.0);
        for (int u = 0; u < 8; ++u) {
            const double cu = (u == 0) ? std::sqrt(0.125) : 0.5;
            for (int x = 0; x < 8; ++x) {
                cosv[u][x] = cu * std::cos((2 * x + 1) * u * pi / 16.0);
            }
        }
    }
};

const DctTables& dct_tables() {
    static const DctTables t;
    return t;
}

// One plane (values centered around 0, units of 255) through DCT, quantize,
// dequantize, inverse DCT. The plane is already padded to 8x8 multiples.
void transform_plane(std::vector<double>& plane, long h, long w, const int* q) {
    const DctTables& t = dct_tables();
    double block[64];
    double freq[64];
    for (long by = 0; by < h; by += 8) {
        for (long bx = 0; bx < w; bx += 8) {
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    block[y * 8 + x] = plane[(by + y) * w + (bx + x)];
            // Forward: rows then columns.
            double rowt[64];
            for (int y = 0; y < 8; ++y)
                for (int u = 0; u < 8; ++u) {
                    double acc = 0.0;
                    for (int x = 0; x < 8; ++x) acc += t.cosv[u][x] * block[y * 8 + x];
                    rowt[y * 8 + u] = acc;
                }
            for (int u = 0; u < 8; ++u)
                for (int v = 0; v < 8; ++v) {
                    double acc = 0.0;
                    for (int y = 0; y < 8; ++y) acc += t.cosv[v][y] * rowt[y * 8 + u];
                    freq[v * 8 + u] = acc;
                }
            // Quantize / dequantize.
            for (int i = 0; i < 64; ++i) {
                freq[i] = std::round(freq[i] / q[i]) * q[i];
            }
            // Inverse: the transform is orthonormal, so transpose the sums.
            for (int v = 0; v < 8; ++v)
                for (int x = 0; x < 8; ++x) {
                    double acc = 0.0;
                    for (int u = 0; u < 8; ++u) acc += t.cosv[u][x] * freq[v * 8 + u];
                    rowt[v * 8 + x] = acc;
                }
            for (int x = 0; x < 8; ++x)
                for (int y = 0; y < 8; ++y) {
                    double acc = 0.0;
                    for (int v = 0; v < 8; ++v) acc += t.cosv[v][y] * rowt[v * 8 + x];
                    block[y * 8 + x] = acc;
                }
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    plane[(by + y) * w + (bx + x)] = block[y * 8 + x];
        }
    }
}

}  // namespace

int jpeg_scaled_entry(int base, int quality) {
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    int v = (base * scale + 50) / 100;
    return std::clamp(v, 1, 255);
}

Tensor jpeg_like_compress(const Tensor& img, int quality) {
    check_image(img, "jpeg_like_compress");
    if (img.shape()[0] != 3) {
        throw ShapeError("jpeg_like_compress expects 3 channels, got " +
                         std::to_string(img.shape()[0]));
    }
    if (quality < 1 || quality > 100) {
        throw ParamError("jpeg_like_compress: quality must be in [1,100], got " +
                         std::to_string(quality));
    }
    const long h = static_cast<long>(img.shape()[1]);
    const long w = static_cast<long>(img.shape()[2]);
    const long ph = (h + 7) / 8 * 8;
    const long pw = (w + 7) / 8 * 8;
    const float* src = img.data().data();

    int qluma[64];
    int qchroma[64];
    for (int i = 0; i < 64; ++i) {
        qluma[i] = jpeg_scaled_entry(kLumaBase[i], quality);
        qchroma[i] = jpeg_scaled_entry(kChromaBase[i], quality);
    }

    // Full-range YCbCr in units of 255, level-shifted by 128, padded by
    // replication to block multiples. No chroma subsampling.
    std::vector<double> yp(static_cast<std::size_t>(ph * pw));
    std::vector<double> cb(yp.size());
    std::vector<double> cr(yp.size());
    for (long y = 0; y < ph; ++y) {
        const long sy = static_cast<long>(clampi(y, h));
        for (long x = 0; x < pw; ++x) {
            const long sx = static_cast<long>(clampi(x, w));
            const double r = 255.0 * src[0 * h * w + sy * w + sx];
            const double g = 255.0 * src[1 * h * w + sy * w + sx];
            const double b = 255.0 * src[2 * h * w + sy * w + sx];
            yp[y * pw + x] = 0.299 * r + 0.587 * g + 0.114 * b - 128.0;
            cb[y * pw + x] = -0.168736 * r - 0.331264 * g + 0.5 * b;
            cr[y * pw + x] = 0.5 * r - 0.418688 * g - 0.081312 * b;
        }
    }
    transform_plane(yp, ph, pw, qluma);
    transform_plane(cb, ph, pw, qchroma);
    transform_plane(cr, ph, pw, qchroma);

    std::vector<float> out(static_cast<std::size_t>(3 * h * w));
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            const double yy = yp[y * pw + x] + 128.0;
            const double ub = cb[y * pw + x];
            const double vr = cr[y * pw + x];
            const double r = yy + 1.402 * vr;
            const double g = yy - 0.344136 * ub - 0.714136 * vr;
            const double b = yy + 1.772 * ub;
            out[0 * h * w + y * w + x] = static_cast<float>(clip01(r / 255.0));
            out[1 * h * w + y * w + x] = static_cast<float>(clip01(g / 255.0));
            out[2 * h * w + y * w + x] = static_cast<float>(clip01(b / 255.0));
        }
    }
    return Tensor::from_data(img.shape(), std::move(out));
}

// ---------------------------------------------------------------------------
// Cubic-convolution resampling
// ---------------------------------------------------------------------------

namespace {

// Keys kernel with a = -0.5; support (-2, 2), reproduces linear ramps.
double cubic_weight(double t) {
    const double a = -0.5;
    t = std::fabs(t);
    if (t < 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return (((t - 5.0) * t + 8.0) * t - 4.0) * a;
    return 0.0;
}

// Resample one axis of length n to m, center-aligned, clamped taps.
// step = n / m in source units.
void axis_taps(long m, long n, double factor, std::vector<long>& idx,
               std::vector<double>& wt) {
    idx.resize(static_cast<std::size_t>(m) * 4);
    wt.resize(static_cast<std::size_t>(m) * 4);
    for (long o = 0; o < m; ++o) {
        const double srcf = (static_cast<double>(o) + 0.5) / factor - 0.5;
        const long base = static_cast<long>(std::floor(srcf));
        for (int tdx = 0; tdx < 4; ++tdx) {
            const long si = base - 1 + tdx;
            idx[o * 4 + tdx] = static_cast<long>(clampi(si, n));
            wt[o * 4 + tdx] = cubic_weight(srcf - static_cast<double>(si));
        }
    }
}

}  // namespace

Tensor resize_bicubic(const Tensor& img, double factor) {
    check_image(img, "resize_bicubic");
    if (!(factor > 0.0)) {
        throw ParamError("resize_bicubic: factor must be > 0, got " +
                         std::to_string(factor));
    }
    const long c = static_cast<long>(img.shape()[0]);
    const long h = static_cast<long>(img.shape()[1]);
    const long w = static_cast<long>(img.shape()[2]);
    const long oh = std::max<long>(1, std::lround(h * factor));
    const long ow = std::max<long>(1, std::lround(w * factor));
    const float* src = img.data().data();

    std::vector<long> xi, yi;
    std::vector<double> xw, yw;
    axis_taps(ow, w, factor, xi, xw);
    axis_taps(oh, h, factor, yi, yw);

    // Horizontal pass into [h, ow], then vertical into [oh, ow], in double.
    std::vector<double> tmp(static_cast<std::size_t>(h * ow));
    std::vector<float> out(static_cast<std::size_t>(c * oh * ow));
    for (long ch = 0; ch < c; ++ch) {
        const float* plane = src + ch * h * w;
        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (int t = 0; t < 4; ++t) {
                    acc += xw[x * 4 + t] * plane[y * w + xi[x * 4 + t]];
                }
                tmp[y * ow + x] = acc;
            }
        }
        float* oplane = out.data() + ch * oh * ow;
        for (long y = 0; y < oh; ++y) {
            for (long x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (int t = 0; t < 4; ++t) {
                    acc += yw[y * 4 + t] * tmp[yi[y * 4 + t] * ow + x];
                }
                oplane[y * ow + x] = static_cast<float>(acc);
            }
        }
    }
    const Shape out_shape{static_cast<int>(c), static_cast<int>(oh),
                          static_cast<int>(ow)};
    if (!(grad_enabled() && img.requires_grad())) {
        return Tensor::from_data(out_shape, std::move(out));
    }

    // Resampling is linear in the pixels, so the backward pass scatters the
    // output gradient through the same tap weights in reverse order.
    auto node = std::make_shared<detail::TensorNode>();
    node->shape = out_shape;
    node->data = std::move(out);
    node->op = "resize_bicubic";
    node->requires_grad = true;
    node->parents = {img.node()};
    node->backward_fn = [c, h, w, oh, ow, xi, xw, yi, yw](detail::TensorNode& n) {
        auto& parent = *n.parents[0];
        std::vector<float> gin(static_cast<std::size_t>(c * h * w), 0.0f);
        std::vector<double> gtmp(static_cast<std::size_t>(h * ow));
        for (long ch = 0; ch < c; ++ch) {
            const float* gout = n.grad.data() + ch * oh * ow;
            std::fill(gtmp.begin(), gtmp.end(), 0.0);
            for (long y = 0; y < oh; ++y) {
                for (long x = 0; x < ow; ++x) {
                    const double g = static_cast<double>(gout[y * ow + x]);
                    for (int t = 0; t < 4; ++t) {
                        gtmp[yi[y * 4 + t] * ow + x] += yw[y * 4 + t] * g;
                    }
                }
            }
            float* gplane = gin.data() + ch * h * w;
            for (long y = 0; y < h; ++y) {
                for (long x = 0; x < ow; ++x) {
                    const double g = gtmp[y * ow + x];
                    for (int t = 0; t < 4; ++t) {
                        gplane[y * w + xi[x * 4 + t]] +=
                            static_cast<float>(xw[x * 4 + t] * g);
                    }
                }
            }
        }
        parent.accumulate(gin);
    };
    return Tensor::wrap(std::move(node));
}

// ---------------------------------------------------------------------------
// Randomized pipelines
// ---------------------------------------------------------------------------

namespace {

struct PipelineDraw {
    double blur_sigma;
    double noise_sigma;
    int quality;
};

PipelineDraw draw_params(std::uint64_t seed) {
    PipelineDraw d;
    d.blur_sigma = 0.2 + 2.8 * prng_uniform(derive_seed(seed, "blur"), 0);
    d.noise_sigma = 0.1 * prng_uniform(derive_seed(seed, "noise"), 0);
    const double u = prng_uniform(derive_seed(seed, "jpeg"), 0);
    d.quality = 30 + static_cast<int>(u * 66.0);  // uniform over 30..95
    if (d.quality > 95) d.quality = 95;
    return d;
}

DegradedFrame apply_pipeline(const Tensor& img, const PipelineDraw& d,
                             std::uint64_t noise_seed, int s) {
    if (s < 1) throw ParamError("degradation pipeline: scale must be >= 1");
    DegradedFrame f;
    f.spec.kind = "pipeline";
    f.spec.blur_sigma = d.blur_sigma;
    f.spec.noise_sigma = d.noise_sigma;
    f.spec.jpeg_quality = d.quality;
    f.spec.scale = 1.0 / static_cast<double>(s);
    f.spec.seed = noise_seed;  // enough to replay this exact frame
    f.image = apply_spec(img, f.spec);
    return f;
}

}  // namespace

Tensor apply_spec(const Tensor& img, const DegradationSpec& spec) {
    if (spec.kind.empty() || spec.kind == "identity") return img;
    if (spec.kind == "blur") return gaussian_blur(img, spec.blur_sigma);
    if (spec.kind == "noise") return add_gaussian_noise(img, spec.noise_sigma, spec.seed);
    if (spec.kind == "jpeg") return jpeg_like_compress(img, spec.jpeg_quality);
    if (spec.kind == "resize") return resize_bicubic(img, spec.scale);
    if (spec.kind == "pipeline") {
        Tensor x = gaussian_blur(img, spec.blur_sigma);
        x = add_gaussian_noise(x, spec.noise_sigma, spec.seed);
        x = jpeg_like_compress(x, spec.jpeg_quality);
        return resize_bicubic(x, spec.scale);
    }
    throw ParamError("unknown degradation kind '" + spec.kind + "'");
}

DegradedFrame random_pipeline(const Tensor& img, std::uint64_t seed, int s) {
    const PipelineDraw d = draw_params(seed);
    return apply_pipeline(img, d, derive_seed(seed, "noise-field"), s);
}

std::vector<DegradedFrame> degrade_sequence(const std::vector<Tensor>& frames,
                                            std::uint64_t seed, int s) {
    PipelineDraw base = draw_params(seed);
    std::vector<DegradedFrame> out;
    out.reserve(frames.size());
    const std::uint64_t jq = derive_seed(seed, "jitter");
    for (std::size_t t = 0; t < frames.size(); ++t) {
        PipelineDraw d = base;
        // Quality drifts a little frame to frame but stays near the clip draw.
        const double jitter =
            (prng_uniform(jq, static_cast<std::uint64_t>(t)) - 0.5) * 10.0;
        d.quality = std::clamp(base.quality + static_cast<int>(std::lround(jitter)),
                               30, 95);
        DegradedFrame f = apply_pipeline(
            frames[t], d, derive_seed(seed, static_cast<std::uint64_t>(t)), s);
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace rvf
