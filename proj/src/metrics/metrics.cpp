#include "rvf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>

#include "rvf/common.hpp"

namespace rvf {

namespace {

void check_batch(const FeatureBatch& samples) {
    if (samples.size() < 2) {
        throw ParamError("covariance needs at least 2 samples, got " +
                         std::to_string(samples.size()));
    }
    const Shape& s0 = samples[0].shape();
    if (samples[0].rank() != 3) {
        throw ShapeError("covariance samples must be [C,H,W], got rank " +
                         std::to_string(samples[0].rank()));
    }
    for (const Tensor& t : samples) {
        if (t.shape() != s0) {
            throw ShapeError("covariance samples must share one shape; saw " +
                             shape_str(s0) + " and " + shape_str(t.shape()));
        }
    }
}

void check_pair(const Tensor& ref, const Tensor& out, const char* who) {
    if (ref.shape() != out.shape()) {
        throw ShapeError(std::string(who) + ": shapes differ, " +
                         shape_str(ref.shape()) + " vs " + shape_str(out.shape()));
    }
}

// Grayscale plane in double: luma for RGB, the sole channel for single-channel
// input, channel mean otherwise. Rank-2 tensors pass through.
std::vector<double> to_gray(const Tensor& img, int& h, int& w) {
    if (img.rank() == 2) {
        h = img.extent(0);
        w = img.extent(1);
        std::vector<double> g(img.data().begin(), img.data().end());
        return g;
    }
    if (img.rank() != 3) {
        throw ShapeError("expected [C,H,W] or [H,W] image, got rank " +
                         std::to_string(img.rank()));
    }
    const int c = img.extent(0);
    h = img.extent(1);
    w = img.extent(2);
    const float* d = img.data().data();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<double> g(plane, 0.0);
    if (c == 3) {
        for (std::size_t i = 0; i < plane; ++i) {
            g[i] = 0.299 * d[i] + 0.587 * d[plane + i] + 0.114 * d[2 * plane + i];
        }
    } else {
        for (int ch = 0; ch < c; ++ch) {
            for (std::size_t i = 0; i < plane; ++i) g[i] += d[ch * plane + i];
        }
        for (double& v : g) v /= c;
    }
    return g;
}

}  // namespace

Tensor covariance_matrix(const FeatureBatch& samples) {
    check_batch(samples);
    const int c = samples[0].extent(0);
    const std::size_t hw = static_cast<std::size_t>(samples[0].extent(1)) *
                           static_cast<std::size_t>(samples[0].extent(2));
    const std::size_t n = samples.size();

    std::vector<double> mean(static_cast<std::size_t>(c) * hw, 0.0);
    for (const Tensor& t : samples) {
        const float* d = t.data().data();
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += d[i];
    }
    for (double& v : mean) v /= static_cast<double>(n);

    std::vector<double> cov(static_cast<std::size_t>(c) * c, 0.0);
    std::vector<double> dev(static_cast<std::size_t>(c) * hw);
    for (const Tensor& t : samples) {
        const float* d = t.data().data();
        for (std::size_t i = 0; i < dev.size(); ++i) dev[i] = d[i] - mean[i];
        for (int i = 0; i < c; ++i) {
            for (int j = i; j < c; ++j) {
                double acc = 0.0;
                const double* di = dev.data() + static_cast<std::size_t>(i) * hw;
                const double* dj = dev.data() + static_cast<std::size_t>(j) * hw;
                for (std::size_t p = 0; p < hw; ++p) acc += di[p] * dj[p];
                cov[static_cast<std::size_t>(i) * c + j] += acc;
            }
        }
    }
    std::vector<float> out(cov.size());
    const double norm = 1.0 / static_cast<double>(n - 1);
    for (int i = 0; i < c; ++i) {
        for (int j = i; j < c; ++j) {
            const double v = cov[static_cast<std::size_t>(i) * c + j] * norm;
            out[static_cast<std::size_t>(i) * c + j] = static_cast<float>(v);
            out[static_cast<std::size_t>(j) * c + i] = static_cast<float>(v);
        }
    }
    return Tensor::from_data({c, c}, std::move(out));
}

double ac_indicator(const FeatureBatch& samples, bool normalized) {
    check_batch(samples);
    const int c = samples[0].extent(0);
    if (c < 2) {
        throw ParamError("off-diagonal indicator needs >= 2 channels, got " +
                         std::to_string(c));
    }
    Tensor cov = covariance_matrix(samples);
    const float* m = cov.data().data();
    double acc = 0.0;
    for (int i = 0; i < c; ++i) {
        for (int j = 0; j < c; ++j) {
            if (i == j) continue;
            double v = m[static_cast<std::size_t>(i) * c + j];
            if (normalized) {
                const double di = m[static_cast<std::size_t>(i) * c + i];
                const double dj = m[static_cast<std::size_t>(j) * c + j];
                const double denom = std::sqrt(di * dj);
                v = denom > 0.0 ? v / denom : 0.0;
            }
            acc += std::fabs(v);
        }
    }
    return acc / static_cast<double>(static_cast<std::int64_t>(c) * c - c);
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
    check_pair(a, b, "cosine_similarity");
    double dot = 0.0, na = 0.0, nb = 0.0;
    const std::vector<float>& da = a.data();
    const std::vector<float>& db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        dot += static_cast<double>(da[i]) * db[i];
        na += static_cast<double>(da[i]) * da[i];
        nb += static_cast<double>(db[i]) * db[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double psnr(const Tensor& ref, const Tensor& out) {
    check_pair(ref, out, "psnr");
    double se = 0.0;
    const std::vector<float>& a = ref.data();
    const std::vector<float>& b = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        se += d * d;
    }
    if (se == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(static_cast<double>(a.size()) / se);
}

double ssim(const Tensor& ref, const Tensor& out) {
    check_pair(ref, out, "ssim");
    int h = 0, w = 0;
    const std::vector<double> x = to_gray(ref, h, w);
    const std::vector<double> y = to_gray(out, h, w);
    constexpr int kWin = 11;
    if (h < kWin || w < kWin) {
        throw ParamError("ssim needs at least 11x11 pixels, got " +
                         std::to_string(h) + "x" + std::to_string(w));
    }
    // Normalized Gaussian window, sigma 1.5.
    double wt[kWin];
    double wsum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double t = i - 5.0;
        wt[i] = std::exp(-t * t / (2.0 * 1.5 * 1.5));
        wsum += wt[i];
    }
    for (double& v : wt) v /= wsum;

    const double c1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
    const double c2 = 0.03 * 0.03;
    double total = 0.0;
    long cnt = 0;
    for (int cy = 0; cy + kWin <= h; ++cy) {
        for (int cx = 0; cx + kWin <= w; ++cx) {
            double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (int dy = 0; dy < kWin; ++dy) {
                for (int dx = 0; dx < kWin; ++dx) {
                    const double g = wt[dy] * wt[dx];
                    const double xv = x[static_cast<std::size_t>(cy + dy) * w + cx + dx];
                    const double yv = y[static_cast<std::size_t>(cy + dy) * w + cx + dx];
                    mx += g * xv;
                    my += g * yv;
                    sxx += g * xv * xv;
                    syy += g * yv * yv;
                    sxy += g * xv * yv;
                }
            }
            const double vx = sxx - mx * mx;
            const double vy = syy - my * my;
            const double cxy = sxy - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++cnt;
        }
    }
    return total / static_cast<double>(cnt);
}

double charbonnier_value(const Tensor& ref, const Tensor& out, double eps) {
    check_pair(ref, out, "charbonnier");
    if (!(eps > 0.0)) throw ParamError("charbonnier: eps must be > 0");
    const std::vector<float>& a = ref.data();
    const std::vector<float>& b = out.data();
    // Accumulate the excess over eps so equal inputs return eps exactly.
    double excess = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        excess += std::hypot(d, eps) - eps;
    }
    return eps + excess / static_cast<double>(a.size());
}

RpsResult radial_power_spectrum(const Tensor& img, int bins) {
    if (bins < 2) throw ParamError("radial spectrum needs >= 2 bins");
    int h = 0, w = 0;
    const std::vector<double> g = to_gray(img, h, w);

    // Row-column DFT in double.
    const double pi = std::acos(-1.0);
    std::vector<std::complex<double>> rows(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y) {
        for (int v = 0; v < w; ++v) {
            std::complex<double> acc(0.0, 0.0);
            for (int x = 0; x < w; ++x) {
                const double ang = -2.0 * pi * v * x / w;
                acc += g[static_cast<std::size_t>(y) * w + x] *
                       std::complex<double>(std::cos(ang), std::sin(ang));
            }
            rows[static_cast<std::size_t>(y) * w + v] = acc;
        }
    }
    RpsResult r;
    r.power.assign(static_cast<std::size_t>(bins), 0.0);
    r.count.assign(static_cast<std::size_t>(bins), 0);
    const double width = 0.5 / bins;
    for (int u = 0; u < h; ++u) {
        const double fu = static_cast<double>(std::min(u, h - u)) / h;
        for (int v = 0; v < w; ++v) {
            std::complex<double> acc(0.0, 0.0);
            for (int y = 0; y < h; ++y) {
                const double ang = -2.0 * pi * u * y / h;
                acc += rows[static_cast<std::size_t>(y) * w + v] *
                       std::complex<double>(std::cos(ang), std::sin(ang));
            }
            const double fv = static_cast<double>(std::min(v, w - v)) / w;
            const double radius = std::sqrt(fu * fu + fv * fv);
            int bin = static_cast<int>(radius / width);
            if (bin >= bins) bin = bins - 1;  // diagonal corner beyond Nyquist
            const double p = std::norm(acc);
            r.power[static_cast<std::size_t>(bin)] += p;
            r.count[static_cast<std::size_t>(bin)] += 1;
            r.total_energy += p;
        }
    }
    for (int b = 0; b < bins; ++b) {
        if (r.count[static_cast<std::size_t>(b)] > 0) {
            r.power[static_cast<std::size_t>(b)] /=
                static_cast<double>(r.count[static_cast<std::size_t>(b)]);
        }
    }
    return r;
}

double MetricReport::mean(const std::string& metric) const {
    auto it = per_frame.find(metric);
    if (it == per_frame.end() || it->second.empty()) {
        throw ParamError("no values recorded for metric '" + metric + "'");
    }
    double acc = 0.0;
    for (double v : it->second) acc += v;
    return acc / static_cast<double>(it->second.size());
}

}  // namespace rvf
