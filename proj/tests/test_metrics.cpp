#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "rvf/metrics.hpp"
#include "rvf/prng.hpp"
#include "rvf/tensor.hpp"
#include "testutil.hpp"

using namespace rvf;
using rvftest::random_tensor;

namespace {

Tensor normal_img(const Shape& s, std::uint64_t seed) {
    std::vector<float> d(static_cast<std::size_t>(numel_of(s)));
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = static_cast<float>(prng_normal(seed, static_cast<std::uint64_t>(i)));
    }
    return Tensor::from_data(s, std::move(d));
}

}  // namespace

TEST_CASE("covariance_matrix: identical samples give the zero matrix") {
    Tensor z = random_tensor({3, 2, 2}, 4, -1.0f, 1.0f);
    Tensor cov = covariance_matrix({z, z, z});
    REQUIRE(cov.shape() == Shape{3, 3});
    for (float v : cov.data()) CHECK(v == 0.0f);
}

TEST_CASE("covariance_matrix: a duplicated channel copies its row and column") {
    FeatureBatch batch;
    for (int n = 0; n < 4; ++n) {
        Tensor half = random_tensor({1, 2, 3}, 50 + static_cast<std::uint64_t>(n),
                                    -1.0f, 1.0f);
        std::vector<float> d = half.data();
        d.insert(d.end(), half.data().begin(), half.data().end());
        batch.push_back(Tensor::from_data({2, 2, 3}, std::move(d)));
    }
    Tensor cov = covariance_matrix(batch);
    const float* m = cov.data().data();
    CHECK(std::fabs(m[0] - m[1]) < 1e-7);  // off-diagonal equals the variance
    CHECK(std::fabs(m[0] - m[2]) < 1e-7);
    CHECK(std::fabs(m[0] - m[3]) < 1e-7);
}

TEST_CASE("covariance_matrix: matches the explicit double-sum oracle") {
    FeatureBatch batch;
    const int n = 5, c = 3, hw = 4;
    for (int i = 0; i < n; ++i) {
        batch.push_back(random_tensor({c, 2, 2}, 80 + static_cast<std::uint64_t>(i),
                                      -2.0f, 2.0f));
    }
    Tensor cov = covariance_matrix(batch);
    std::vector<double> mean(static_cast<std::size_t>(c) * hw, 0.0);
    for (const Tensor& t : batch)
        for (int i = 0; i < c * hw; ++i)
            mean[static_cast<std::size_t>(i)] += t.data()[static_cast<std::size_t>(i)] / n;
    for (int i = 0; i < c; ++i) {
        for (int j = 0; j < c; ++j) {
            double want = 0.0;
            for (const Tensor& t : batch) {
                for (int p = 0; p < hw; ++p) {
                    const double di =
                        t.data()[static_cast<std::size_t>(i * hw + p)] -
                        mean[static_cast<std::size_t>(i * hw + p)];
                    const double dj =
                        t.data()[static_cast<std::size_t>(j * hw + p)] -
                        mean[static_cast<std::size_t>(j * hw + p)];
                    want += di * dj;
                }
            }
            want /= n - 1;
            CHECK(std::fabs(cov.data()[static_cast<std::size_t>(i * c + j)] - want) < 1e-6);
        }
    }
}

TEST_CASE("covariance_matrix: rejects undersized or ragged batches") {
    Tensor z = random_tensor({3, 2, 2}, 4, -1.0f, 1.0f);
    CHECK_THROWS_AS(covariance_matrix({z}), ParamError);
    Tensor other = random_tensor({3, 2, 3}, 4, -1.0f, 1.0f);
    CHECK_THROWS_AS(covariance_matrix({z, other}), ShapeError);
}

TEST_CASE("ac_indicator: zero for identical samples, one for duplicated unit-variance channels") {
    Tensor z = random_tensor({2, 2, 2}, 9, -1.0f, 1.0f);
    CHECK(ac_indicator({z, z, z}) == 0.0);
    // Both channels equal; sample values -1, 0, 1 give channel variance 1.
    FeatureBatch dup = {Tensor::full({2, 1, 1}, -1.0f), Tensor::full({2, 1, 1}, 0.0f),
                        Tensor::full({2, 1, 1}, 1.0f)};
    CHECK(ac_indicator(dup) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ac_indicator(dup, true) == doctest::Approx(1.0).epsilon(1e-6));
    Tensor narrow = random_tensor({1, 2, 2}, 9, -1.0f, 1.0f);
    CHECK_THROWS_AS(ac_indicator({narrow, narrow}), ParamError);
}

TEST_CASE("ac_indicator: invariant under channel and sample permutations") {
    FeatureBatch batch;
    for (int i = 0; i < 4; ++i) {
        batch.push_back(random_tensor({4, 3, 3}, 200 + static_cast<std::uint64_t>(i),
                                      -1.0f, 1.0f));
    }
    const double base = ac_indicator(batch);
    const int perm[4] = {2, 0, 3, 1};
    FeatureBatch shuffled;
    for (int i = 3; i >= 0; --i) {
        const Tensor& t = batch[static_cast<std::size_t>(i)];
        std::vector<float> d(t.data().size());
        for (int ch = 0; ch < 4; ++ch) {
            std::copy_n(t.data().begin() + perm[ch] * 9, 9, d.begin() + ch * 9);
        }
        shuffled.push_back(Tensor::from_data({4, 3, 3}, std::move(d)));
    }
    CHECK(std::fabs(ac_indicator(shuffled) - base) < 1e-12);
}

TEST_CASE("ac_indicator: normalized form ignores feature scale") {
    FeatureBatch batch, scaled;
    for (int i = 0; i < 5; ++i) {
        Tensor t = random_tensor({3, 3, 3}, 300 + static_cast<std::uint64_t>(i),
                                 -1.0f, 1.0f);
        batch.push_back(t);
        std::vector<float> d = t.data();
        for (float& v : d) v *= 3.0f;
        scaled.push_back(Tensor::from_data({3, 3, 3}, std::move(d)));
    }
    CHECK(ac_indicator(scaled) ==
          doctest::Approx(9.0 * ac_indicator(batch)).epsilon(1e-5));
    CHECK(ac_indicator(scaled, true) ==
          doctest::Approx(ac_indicator(batch, true)).epsilon(1e-6));
}

TEST_CASE("cosine_similarity: fixed points and high-precision oracle") {
    Tensor v = random_tensor({2, 3, 4}, 12, -1.0f, 1.0f);
    CHECK(cosine_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-12));
    Tensor e0 = Tensor::from_data({1, 1, 3}, {1.0f, 0.0f, 0.0f});
    Tensor e1 = Tensor::from_data({1, 1, 3}, {0.0f, 1.0f, 0.0f});
    CHECK(cosine_similarity(e0, e1) == 0.0);
    Tensor zero = Tensor::zeros({2, 3, 4});
    CHECK(cosine_similarity(v, zero) == 0.0);

    Tensor a = random_tensor({2, 3, 4}, 21, -2.0f, 2.0f);
    Tensor b = random_tensor({2, 3, 4}, 22, -2.0f, 2.0f);
    long double dot = 0.0L, na = 0.0L, nb = 0.0L;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        dot += static_cast<long double>(a.data()[i]) * b.data()[i];
        na += static_cast<long double>(a.data()[i]) * a.data()[i];
        nb += static_cast<long double>(b.data()[i]) * b.data()[i];
    }
    const double want = static_cast<double>(dot / sqrtl(na * nb));
    CHECK(std::fabs(cosine_similarity(a, b) - want) < 1e-7);
    CHECK(cosine_similarity(a, b) >= -1.0);
    CHECK(cosine_similarity(a, b) <= 1.0);

    // Positive rescaling of either argument changes nothing.
    std::vector<float> d = a.data();
    for (float& x : d) x *= 2.5f;
    Tensor a2 = Tensor::from_data({2, 3, 4}, std::move(d));
    CHECK(cosine_similarity(a2, b) == doctest::Approx(cosine_similarity(a, b)).epsilon(1e-6));
}

TEST_CASE("psnr: sentinel, closed forms, symmetry") {
    Tensor x = random_tensor({3, 4, 4}, 31, 0.0f, 1.0f);
    CHECK(std::isinf(psnr(x, x)));
    Tensor zeros = Tensor::zeros({1, 4, 4});
    Tensor ones = Tensor::full({1, 4, 4}, 1.0f);
    CHECK(psnr(zeros, ones) == doctest::Approx(0.0).epsilon(1e-12));
    Tensor step = Tensor::full({1, 4, 4}, 1.0f / 255.0f);
    CHECK(std::fabs(psnr(zeros, step) - 20.0 * std::log10(255.0)) < 1e-4);
    CHECK(std::fabs(psnr(zeros, step) - 48.1308) < 1e-3);
    Tensor y = random_tensor({3, 4, 4}, 32, 0.0f, 1.0f);
    CHECK(psnr(x, y) == psnr(y, x));
}

TEST_CASE("ssim: perfect match, zero-variance closed form, symmetry") {
    Tensor x = random_tensor({3, 16, 16}, 41, 0.0f, 1.0f);
    CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-6));
    Tensor g = random_tensor({1, 12, 14}, 42, 0.0f, 1.0f);
    CHECK(ssim(g, g) == doctest::Approx(1.0).epsilon(1e-6));

    Tensor zeros = Tensor::zeros({1, 11, 11});
    Tensor ones = Tensor::full({1, 11, 11}, 1.0f);
    const double c1 = 1e-4;
    CHECK(std::fabs(ssim(zeros, ones) - c1 / (1.0 + c1)) < 1e-9);

    Tensor y = random_tensor({3, 16, 16}, 43, 0.0f, 1.0f);
    CHECK(std::fabs(ssim(x, y) - ssim(y, x)) < 1e-12);
    CHECK(ssim(x, y) >= -1.0);
    CHECK(ssim(x, y) <= 1.0);
    Tensor small = random_tensor({1, 8, 8}, 44, 0.0f, 1.0f);
    CHECK_THROWS_AS(ssim(small, small), ParamError);
}

TEST_CASE("ssim: agrees with an independent windowed reference") {
    Tensor a = random_tensor({1, 13, 15}, 51, 0.0f, 1.0f);
    Tensor b = random_tensor({1, 13, 15}, 52, 0.0f, 1.0f);
    const int h = 13, w = 15;
    long double wt[11];
    long double wsum = 0.0L;
    for (int i = 0; i < 11; ++i) {
        const long double t = i - 5.0L;
        wt[i] = expl(-t * t / 4.5L);
        wsum += wt[i];
    }
    for (long double& v : wt) v /= wsum;
    long double total = 0.0L;
    long cnt = 0;
    for (int cy = 0; cy + 11 <= h; ++cy) {
        for (int cx = 0; cx + 11 <= w; ++cx) {
            // Deviation-form accumulation: means first, then central moments.
            long double mx = 0.0L, my = 0.0L;
            for (int dy = 0; dy < 11; ++dy)
                for (int dx = 0; dx < 11; ++dx) {
                    const long double g = wt[dy] * wt[dx];
                    mx += g * a.data()[static_cast<std::size_t>((cy + dy) * w + cx + dx)];
                    my += g * b.data()[static_cast<std::size_t>((cy + dy) * w + cx + dx)];
                }
            long double vx = 0.0L, vy = 0.0L, cxy = 0.0L;
            for (int dy = 0; dy < 11; ++dy)
                for (int dx = 0; dx < 11; ++dx) {
                    const long double g = wt[dy] * wt[dx];
                    const long double da =
                        a.data()[static_cast<std::size_t>((cy + dy) * w + cx + dx)] - mx;
                    const long double db =
                        b.data()[static_cast<std::size_t>((cy + dy) * w + cx + dx)] - my;
                    vx += g * da * da;
                    vy += g * db * db;
                    cxy += g * da * db;
                }
            const long double c1 = 1e-4L, c2 = 9e-4L;
            total += ((2.0L * mx * my + c1) * (2.0L * cxy + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++cnt;
        }
    }
    const double want = static_cast<double>(total / cnt);
    CHECK(std::fabs(ssim(a, b) - want) < 1e-4);
}

TEST_CASE("charbonnier_value: identity is exactly eps, closed form, oracle") {
    Tensor x = random_tensor({2, 5, 5}, 61, 0.0f, 1.0f);
    CHECK(charbonnier_value(x, x, 1e-3) == 1e-3);
    CHECK(charbonnier_value(x, x, 0.02) == 0.02);

    Tensor zeros = Tensor::zeros({1, 3, 3});
    Tensor ones = Tensor::full({1, 3, 3}, 1.0f);
    CHECK(std::fabs(charbonnier_value(zeros, ones, 1e-3) - std::sqrt(1.0 + 1e-6)) < 1e-12);

    Tensor y = random_tensor({2, 5, 5}, 62, 0.0f, 1.0f);
    long double acc = 0.0L;
    for (std::size_t i = 0; i < x.data().size(); ++i) {
        const long double d = static_cast<long double>(x.data()[i]) - y.data()[i];
        acc += sqrtl(d * d + 1e-6L);
    }
    const double want = static_cast<double>(acc / x.data().size());
    CHECK(std::fabs(charbonnier_value(x, y, 1e-3) - want) < 1e-7);
    CHECK_THROWS_AS(charbonnier_value(x, y, 0.0), ParamError);
}

TEST_CASE("radial_power_spectrum: constant image concentrates in the DC bin") {
    Tensor flat = Tensor::full({1, 16, 16}, 0.42f);
    RpsResult r = radial_power_spectrum(flat, 6);
    REQUIRE(r.power.size() == 6);
    CHECK(r.power[0] > 1.0);
    for (std::size_t b = 1; b < r.power.size(); ++b) CHECK(r.power[b] < 1e-9);
    long long total = 0;
    for (long long c : r.count) total += c;
    CHECK(total == 256);
    CHECK_THROWS_AS(radial_power_spectrum(flat, 1), ParamError);
}

TEST_CASE("radial_power_spectrum: pure sinusoid lands in its own bin") {
    const double pi = std::acos(-1.0);
    std::vector<float> d(32 * 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            d[static_cast<std::size_t>(y * 32 + x)] =
                static_cast<float>(std::sin(2.0 * pi * 8.0 * x / 32.0));
    Tensor img = Tensor::from_data({1, 32, 32}, std::move(d));
    RpsResult r = radial_power_spectrum(img, 8);
    // Frequency 8/32 = 0.25 falls in bin 4 of 8.
    for (std::size_t b = 0; b < r.power.size(); ++b) {
        if (b == 4) continue;
        CHECK(r.power[4] > 1e6 * r.power[b]);
    }
}

TEST_CASE("radial_power_spectrum: white noise averages flat across bins") {
    const int bins = 8;
    std::vector<double> mean_power(bins, 0.0);
    for (std::uint64_t s = 0; s < 20; ++s) {
        Tensor img = normal_img({1, 64, 64}, 900 + s);
        RpsResult r = radial_power_spectrum(img, bins);
        for (int b = 0; b < bins; ++b) mean_power[static_cast<std::size_t>(b)] += r.power[static_cast<std::size_t>(b)] / 20.0;
    }
    double grand = 0.0;
    for (double p : mean_power) grand += p / bins;
    for (double p : mean_power) {
        CHECK(std::fabs(p - grand) < 0.10 * grand);
    }
}

TEST_CASE("radial_power_spectrum: matches a direct transform oracle") {
    Tensor img = random_tensor({1, 16, 16}, 71, -1.0f, 1.0f);
    const int bins = 5;
    RpsResult r = radial_power_spectrum(img, bins);
    const double pi = std::acos(-1.0);
    std::vector<double> want(bins, 0.0);
    std::vector<long> cnt(bins, 0);
    for (int u = 0; u < 16; ++u) {
        for (int v = 0; v < 16; ++v) {
            double re = 0.0, im = 0.0;
            for (int y = 0; y < 16; ++y)
                for (int x = 0; x < 16; ++x) {
                    const double ang = -2.0 * pi * (u * y + v * x) / 16.0;
                    const double val = img.data()[static_cast<std::size_t>(y * 16 + x)];
                    re += val * std::cos(ang);
                    im += val * std::sin(ang);
                }
            const double fu = std::min(u, 16 - u) / 16.0;
            const double fv = std::min(v, 16 - v) / 16.0;
            int b = static_cast<int>(std::sqrt(fu * fu + fv * fv) / (0.5 / bins));
            if (b >= bins) b = bins - 1;
            want[static_cast<std::size_t>(b)] += re * re + im * im;
            cnt[static_cast<std::size_t>(b)] += 1;
        }
    }
    for (int b = 0; b < bins; ++b) {
        const double w = want[static_cast<std::size_t>(b)] / cnt[static_cast<std::size_t>(b)];
        CHECK(r.power[static_cast<std::size_t>(b)] ==
              doctest::Approx(w).epsilon(1e-9));
    }
}

TEST_CASE("radial_power_spectrum: binned energy satisfies Parseval") {
    for (const Shape& s : {Shape{1, 24, 24}, Shape{3, 20, 18}}) {
        Tensor img = random_tensor(s, 81, 0.0f, 1.0f);
        RpsResult r = radial_power_spectrum(img, 7);
        double binned = 0.0;
        for (std::size_t b = 0; b < r.power.size(); ++b) {
            binned += r.power[b] * static_cast<double>(r.count[b]);
        }
        // Spatial-domain energy of the grayscale plane, times H*W.
        const int c = s[0], h = s[1], w = s[2];
        std::vector<double> g(static_cast<std::size_t>(h) * w, 0.0);
        const std::size_t plane = g.size();
        if (c == 3) {
            for (std::size_t i = 0; i < plane; ++i)
                g[i] = 0.299 * img.data()[i] + 0.587 * img.data()[plane + i] +
                       0.114 * img.data()[2 * plane + i];
        } else {
            for (std::size_t i = 0; i < plane; ++i) g[i] = img.data()[i];
        }
        double spatial = 0.0;
        for (double v : g) spatial += v * v;
        const double want = spatial * h * w;
        CHECK(std::fabs(binned - want) / want < 1e-6);
        CHECK(std::fabs(r.total_energy - want) / want < 1e-6);
    }
}

TEST_CASE("metric report: mean is the arithmetic mean of per-frame values") {
    MetricReport rep;
    rep.frames = {"f0", "f1", "f2"};
    rep.per_frame["psnr"] = {30.0, 32.0, 34.0};
    CHECK(rep.mean("psnr") == doctest::Approx(32.0).epsilon(1e-12));
    CHECK_THROWS_AS(rep.mean("ssim"), ParamError);
}
