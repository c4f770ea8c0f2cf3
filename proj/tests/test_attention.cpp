#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rvf/attention.hpp"
#include "testutil.hpp"

using namespace rvf;
using rvftest::close;
using rvftest::fd_check;
using rvftest::max_abs_diff;
using rvftest::random_tensor;

namespace {

// Mean absolute off-diagonal entry of the channel covariance matrix,
// computed in double with spatial positions as samples.
double ac_of(const Tensor& t) {
    const int c = t.extent(0);
    const int hw = t.extent(1) * t.extent(2);
    std::vector<double> mu(static_cast<std::size_t>(c), 0.0);
    for (int i = 0; i < c; ++i) {
        for (int p = 0; p < hw; ++p) mu[i] += t.data()[i * hw + p];
        mu[i] /= hw;
    }
    double acc = 0.0;
    for (int i = 0; i < c; ++i)
        for (int j = 0; j < c; ++j) {
            if (i == j) continue;
            double cov = 0.0;
            for (int p = 0; p < hw; ++p)
                cov += (t.data()[i * hw + p] - mu[i]) * (t.data()[j * hw + p] - mu[j]);
            acc += std::fabs(cov / (hw - 1));
        }
    return acc / (static_cast<double>(c) * (c - 1));
}

Tensor normal_tensor(const Shape& s, std::uint64_t seed) {
    SeedStream rng(seed);
    std::vector<float> v(static_cast<std::size_t>(numel_of(s)));
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return Tensor::from_data(s, std::move(v));
}

void zero_param(ParamMap& params, const std::string& name) {
    auto it = params.find(name);
    REQUIRE(it != params.end());
    auto& d = it->second.leaf_data();
    std::fill(d.begin(), d.end(), 0.0f);
}

AttentionConfig base_cfg(int dim, int key_dim, int heads = 1, int window = 4) {
    AttentionConfig cfg;
    cfg.dim = dim;
    cfg.key_dim = key_dim;
    cfg.proj_dim = dim;
    cfg.heads = heads;
    cfg.window = window;
    cfg.squeeze_ratio = 1;
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    AttentionConfig bad = base_cfg(6, 6);
    bad.squeeze_ratio = 4;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = base_cfg(8, 8);
    bad.heads = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    SeedStream rng(1);
    AttentionConfig odd = base_cfg(8, 6, 4);
    CHECK_THROWS_AS(ChannelAttention(odd, rng), ConfigError);
}

TEST_CASE("spatial attention: single-position windows pass values through") {
    SeedStream rng(100);
    SpatialWindowAttention attn(base_cfg(4, 4, 1, 1), rng);
    ParamMap p;
    attn.collect("s.", p);
    Tensor x = normal_tensor({4, 3, 3}, 101);
    Tensor y = normal_tensor({4, 3, 3}, 102);
    SpatialAttentionOut out = attn.forward(x, y);

    Tensor v = conv2d(layer_norm(y, p.at("s.ln_y.gamma"), p.at("s.ln_y.beta")),
                      p.at("s.v_proj.weight"), Tensor());
    CHECK(max_abs_diff(out.features.data(), v.data()) == 0.0);
    for (const auto& m : out.maps) {
        CHECK(m.shape() == Shape{1, 1});
        CHECK(m.data()[0] == 1.0f);
    }
}

TEST_CASE("spatial attention: identical keys give the window mean") {
    SeedStream rng(110);
    SpatialWindowAttention attn(base_cfg(4, 4, 1, 4), rng);
    ParamMap p;
    attn.collect("s.", p);
    zero_param(p, "s.k_proj.weight");
    Tensor x = normal_tensor({4, 8, 8}, 111);
    Tensor y = normal_tensor({4, 8, 8}, 112);
    SpatialAttentionOut out = attn.forward(x, y);

    Tensor v = conv2d(layer_norm(y, p.at("s.ln_y.gamma"), p.at("s.ln_y.beta")),
                      p.at("s.v_proj.weight"), Tensor());
    for (int wy = 0; wy < 2; ++wy)
        for (int wx = 0; wx < 2; ++wx)
            for (int d = 0; d < 4; ++d) {
                double mean = 0.0;
                for (int i = 0; i < 4; ++i)
                    for (int j = 0; j < 4; ++j)
                        mean += v.data()[(d * 8 + wy * 4 + i) * 8 + wx * 4 + j];
                mean /= 16.0;
                for (int i = 0; i < 4; ++i)
                    for (int j = 0; j < 4; ++j)
                        CHECK(close(out.features.data()[(d * 8 + wy * 4 + i) * 8 + wx * 4 + j],
                                    static_cast<float>(mean), 1e-6f));
            }
}

TEST_CASE("spatial attention: brute-force window oracle on 8x8") {
    for (int heads : {1, 2}) {
        CAPTURE(heads);
        SeedStream rng(120 + heads);
        const int D = 4, W = 4;
        SpatialWindowAttention attn(base_cfg(D, 6, heads, W), rng);
        ParamMap p;
        attn.collect("s.", p);
        Tensor x = normal_tensor({D, 8, 8}, 121);
        Tensor y = normal_tensor({6, 8, 8}, 122);
        SpatialAttentionOut out = attn.forward(x, y);
        REQUIRE(out.features.shape() == Shape{D, 8, 8});
        REQUIRE(out.maps.size() == static_cast<std::size_t>(4 * heads));

        Tensor q = conv2d(layer_norm(x, p.at("s.ln_x.gamma"), p.at("s.ln_x.beta")),
                          p.at("s.q_proj.weight"), Tensor());
        Tensor k = conv2d(layer_norm(y, p.at("s.ln_y.gamma"), p.at("s.ln_y.beta")),
                          p.at("s.k_proj.weight"), Tensor());
        Tensor v = conv2d(layer_norm(y, p.at("s.ln_y.gamma"), p.at("s.ln_y.beta")),
                          p.at("s.v_proj.weight"), Tensor());
        const int dh = D / heads;
        auto pix = [&](const Tensor& t, int d, int wy, int wx, int pos) {
            return static_cast<double>(
                t.data()[(d * 8 + wy * W + pos / W) * 8 + wx * W + pos % W]);
        };
        for (int wy = 0; wy < 2; ++wy)
            for (int wx = 0; wx < 2; ++wx)
                for (int hd = 0; hd < heads; ++hd)
                    for (int qp = 0; qp < W * W; ++qp) {
                        std::vector<double> logits(W * W);
                        for (int kp = 0; kp < W * W; ++kp) {
                            double dot = 0.0;
                            for (int d = 0; d < dh; ++d)
                                dot += pix(q, hd * dh + d, wy, wx, qp) *
                                       pix(k, hd * dh + d, wy, wx, kp);
                            logits[kp] = dot / std::sqrt(static_cast<double>(dh));
                        }
                        double mx = logits[0], denom = 0.0;
                        for (double l : logits) mx = std::max(mx, l);
                        for (double& l : logits) denom += (l = std::exp(l - mx));
                        for (int d = 0; d < dh; ++d) {
                            double acc = 0.0;
                            for (int kp = 0; kp < W * W; ++kp)
                                acc += logits[kp] / denom * pix(v, hd * dh + d, wy, wx, kp);
                            CHECK(std::fabs(pix(out.features, hd * dh + d, wy, wx, qp) - acc) <
                                  1e-5);
                        }
                    }
    }
}

TEST_CASE("spatial attention: rows are stochastic; padding path keeps shape") {
    SeedStream rng(130);
    SpatialWindowAttention attn(base_cfg(8, 8, 2, 4), rng);
    Tensor x = normal_tensor({8, 10, 14}, 131);
    SpatialAttentionOut out = attn.forward(x, x);
    CHECK(out.features.shape() == Shape{8, 10, 14});
    CHECK(all_finite(out.features));
    CHECK(out.maps.size() == static_cast<std::size_t>(3 * 4 * 2));
    for (const auto& m : out.maps)
        for (int i = 0; i < m.extent(0); ++i) {
            double s = 0.0;
            for (int j = 0; j < m.extent(1); ++j) {
                const float a = m.data()[i * m.extent(1) + j];
                CHECK(a >= 0.0f);
                s += a;
            }
            CHECK(std::fabs(s - 1.0) < 1e-6);
        }
}

TEST_CASE("channel attention: zero query projection gives value-channel mean") {
    SeedStream rng(140);
    ChannelAttention attn(base_cfg(4, 8), rng);
    ParamMap p;
    attn.collect("c.", p);
    zero_param(p, "c.q_proj.weight");
    Tensor x = normal_tensor({4, 5, 5}, 141);
    Tensor y = normal_tensor({8, 5, 5}, 142);
    ChannelAttentionOut out = attn.forward(x, y);

    Tensor v = conv2d(layer_norm(y, p.at("c.ln_y.gamma"), p.at("c.ln_y.beta")),
                      p.at("c.v_proj.weight"), Tensor());
    for (int i = 0; i < 4 * 8; ++i) CHECK(close(out.map.data()[i], 0.125f, 1e-7f));
    for (int c = 0; c < 4; ++c)
        for (int pos = 0; pos < 25; ++pos) {
            double mean = 0.0;
            for (int j = 0; j < 8; ++j) mean += v.data()[j * 25 + pos];
            mean /= 8.0;
            CHECK(close(out.features.data()[c * 25 + pos], static_cast<float>(mean), 1e-6f));
        }
}

TEST_CASE("channel attention: single key channel copies it everywhere") {
    SeedStream rng(150);
    ChannelAttention attn(base_cfg(3, 1), rng);
    ParamMap p;
    attn.collect("c.", p);
    Tensor x = normal_tensor({3, 4, 4}, 151);
    Tensor y = normal_tensor({1, 4, 4}, 152);
    ChannelAttentionOut out = attn.forward(x, y);
    for (float a : out.map.data()) CHECK(a == 1.0f);
    Tensor v = conv2d(layer_norm(y, p.at("c.ln_y.gamma"), p.at("c.ln_y.beta")),
                      p.at("c.v_proj.weight"), Tensor());
    for (int c = 0; c < 3; ++c)
        for (int pos = 0; pos < 16; ++pos)
            CHECK(out.features.data()[c * 16 + pos] == v.data()[pos]);
}

TEST_CASE("channel attention: scalar oracle on random input") {
    for (int heads : {1, 2}) {
        CAPTURE(heads);
        SeedStream rng(160 + heads);
        ChannelAttention attn(base_cfg(4, 4, heads), rng);
        ParamMap p;
        attn.collect("c.", p);
        Tensor x = normal_tensor({4, 3, 3}, 161);
        Tensor y = normal_tensor({4, 3, 3}, 162);
        ChannelAttentionOut out = attn.forward(x, y);

        Tensor q = conv2d(layer_norm(x, p.at("c.ln_x.gamma"), p.at("c.ln_x.beta")),
                          p.at("c.q_proj.weight"), Tensor());
        Tensor k = conv2d(layer_norm(y, p.at("c.ln_y.gamma"), p.at("c.ln_y.beta")),
                          p.at("c.k_proj.weight"), Tensor());
        Tensor v = conv2d(layer_norm(y, p.at("c.ln_y.gamma"), p.at("c.ln_y.beta")),
                          p.at("c.v_proj.weight"), Tensor());
        const int ch = 4 / heads;
        for (int hd = 0; hd < heads; ++hd)
            for (int i = 0; i < ch; ++i) {
                const int row = hd * ch + i;
                std::vector<double> logits(ch);
                for (int j = 0; j < ch; ++j) {
                    double dot = 0.0;
                    for (int pos = 0; pos < 9; ++pos)
                        dot += static_cast<double>(q.data()[row * 9 + pos]) *
                               k.data()[(hd * ch + j) * 9 + pos];
                    logits[j] = dot;  // alpha = 1 at init
                }
                double mx = logits[0], denom = 0.0;
                for (double l : logits) mx = std::max(mx, l);
                for (double& l : logits) denom += (l = std::exp(l - mx));
                for (int j = 0; j < ch; ++j)
                    CHECK(std::fabs(out.map.data()[row * 4 + hd * ch + j] - logits[j] / denom) <
                          1e-5);
                for (int pos = 0; pos < 9; ++pos) {
                    double acc = 0.0;
                    for (int j = 0; j < ch; ++j)
                        acc += logits[j] / denom * v.data()[(hd * ch + j) * 9 + pos];
                    CHECK(std::fabs(out.features.data()[row * 9 + pos] - acc) < 1e-5);
                }
            }
    }
}

TEST_CASE("channel attention: map rows stochastic, block-diagonal across heads") {
    SeedStream rng(170);
    ChannelAttention attn(base_cfg(8, 8, 2), rng);
    Tensor x = normal_tensor({8, 4, 4}, 171);
    ChannelAttentionOut out = attn.forward(x, x);
    for (int i = 0; i < 8; ++i) {
        double s = 0.0;
        for (int j = 0; j < 8; ++j) {
            const float a = out.map.data()[i * 8 + j];
            CHECK(a >= 0.0f);
            s += a;
            const bool same_head = (i / 4) == (j / 4);
            if (!same_head) CHECK(a == 0.0f);
        }
        CHECK(std::fabs(s - 1.0) < 1e-6);
    }
}

TEST_CASE("channel attention: positive rescaling of inputs keeps row argmax") {
    SeedStream rng(180);
    ChannelAttention attn(base_cfg(6, 6), rng);
    Tensor x = normal_tensor({6, 5, 5}, 181);
    Tensor y = normal_tensor({6, 5, 5}, 182);
    ChannelAttentionOut a = attn.forward(x, y);
    ChannelAttentionOut b = attn.forward(mul_scalar(x, 3.7f), mul_scalar(y, 3.7f));
    for (int i = 0; i < 6; ++i) {
        int arg_a = 0, arg_b = 0;
        for (int j = 1; j < 6; ++j) {
            if (a.map.data()[i * 6 + j] > a.map.data()[i * 6 + arg_a]) arg_a = j;
            if (b.map.data()[i * 6 + j] > b.map.data()[i * 6 + arg_b]) arg_b = j;
        }
        CHECK(arg_a == arg_b);
    }
}

TEST_CASE("covariance raising: channel attention beats input and spatial attention") {
    SeedStream rng(190);
    AttentionConfig cfg = base_cfg(8, 8, 1, 4);
    ChannelAttention cattn(cfg, rng);
    SpatialWindowAttention sattn(cfg, rng);
    NoGradGuard ng;
    double ac_in = 0.0, ac_ch = 0.0, ac_sp = 0.0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        Tensor x = normal_tensor({8, 8, 8}, derive_seed(1900, t));
        ac_in += ac_of(x);
        ac_ch += ac_of(cattn.forward(x, x).features);
        ac_sp += ac_of(sattn.forward(x, x).features);
    }
    ac_in /= trials;
    ac_ch /= trials;
    ac_sp /= trials;
    CAPTURE(ac_in);
    CAPTURE(ac_ch);
    CAPTURE(ac_sp);
    CHECK(ac_ch > ac_in);
    CHECK(ac_ch > ac_sp);
}

TEST_CASE("rescale weights: symmetry, range, fresh blocks start at one half") {
    SeedStream rng(200);
    RescaleMlp mlp(rng);
    Tensor uniform_map = Tensor::full({5, 5}, 0.2f);
    Tensor w = mlp.forward(uniform_map);
    REQUIRE(w.shape() == Shape{5});
    for (int i = 1; i < 5; ++i) CHECK(w.data()[i] == w.data()[0]);
    for (float v : w.data()) CHECK(v == 0.5f);  // zero-initialized last layer

    for (int t = 0; t < 5; ++t) {
        Tensor m = random_tensor({6, 6}, 201 + t, -3.0f, 3.0f);
        Tensor r = mlp.forward(m);
        for (float v : r.data()) {
            CHECK(v > 0.0f);
            CHECK(v < 1.0f);
        }
    }
}

TEST_CASE("rescale weights: compositional oracle with live last layer") {
    SeedStream rng(210);
    RescaleMlp mlp(rng);
    ParamMap p;
    mlp.collect("m.", p);
    {
        SeedStream wr(211);
        for (auto& vv : p.at("m.l2.weight").leaf_data())
            vv = static_cast<float>(wr.uniform(-1.0, 1.0));
        p.at("m.l2.bias").leaf_data()[0] = 0.3f;
    }
    Tensor map = random_tensor({4, 4}, 212, -2.0f, 2.0f);
    Tensor w = mlp.forward(map);

    const auto& w1 = p.at("m.l1.weight").data();  // [2 x 4], stored input-major
    const auto& b1 = p.at("m.l1.bias").data();
    const auto& w2 = p.at("m.l2.weight").data();  // [4 x 1]
    const float b2 = p.at("m.l2.bias").data()[0];
    for (int i = 0; i < 4; ++i) {
        double mean = 0.0, mx = map.data()[i * 4];
        for (int j = 0; j < 4; ++j) {
            mean += map.data()[i * 4 + j];
            mx = std::max<double>(mx, map.data()[i * 4 + j]);
        }
        mean /= 4.0;
        double out = b2;
        for (int hcol = 0; hcol < 4; ++hcol) {
            double hidden = mean * w1[hcol] + mx * w1[4 + hcol] + b1[hcol];
            hidden = std::max(hidden, 0.0);
            out += hidden * w2[hcol];
        }
        const double sig = 1.0 / (1.0 + std::exp(-out));
        CHECK(std::fabs(w.data()[i] - sig) < 1e-6);
    }
}

TEST_CASE("squeezed channel rescale block: degenerate and shape contracts") {
    SeedStream rng(220);
    AttentionConfig cfg = base_cfg(4, 4);
    cfg.squeeze_ratio = 4;
    Ica ica(cfg, rng);
    Tensor x = normal_tensor({4, 6, 6}, 221);
    Tensor y = ica.forward(x);
    CHECK(y.shape() == x.shape());
    CHECK(all_finite(y));

    for (auto [dim, ratio, heads] : {std::tuple{8, 2, 2}, {8, 4, 1}, {6, 3, 2}}) {
        SeedStream r2(222);
        AttentionConfig c2 = base_cfg(dim, dim, heads);
        c2.squeeze_ratio = ratio;
        Ica blk(c2, r2);
        Tensor in = normal_tensor({dim, 5, 5}, 223);
        CHECK(blk.forward(in).shape() == in.shape());
    }
}

TEST_CASE("squeezed channel rescale block: gradient vs finite differences") {
    SeedStream rng(230);
    AttentionConfig cfg = base_cfg(8, 8, 2);
    cfg.squeeze_ratio = 2;
    Ica ica(cfg, rng);
    CHECK(fd_check([&ica](const std::vector<Tensor>& in) { return ica.forward(in[0]); },
                   {random_tensor({8, 5, 5}, 231)})
              .pass());
}

TEST_CASE("fusion block: shape contract and single-channel value passthrough") {
    SeedStream rng(240);
    Caf caf(1, rng);
    ParamMap p;
    caf.collect("caf.", p);
    Tensor f = normal_tensor({1, 5, 5}, 241);
    Tensor h = normal_tensor({1, 5, 5}, 242);
    Tensor out = caf.forward(f, h);
    CHECK(out.shape() == Shape{1, 5, 5});

    // with one channel the attention map is [[1]], so the branch output is V
    Tensor kv = conv2d(conv2d(layer_norm(h, p.at("caf.ln_h.gamma"), p.at("caf.ln_h.beta")),
                              p.at("caf.kv_point.weight"), Tensor()),
                       p.at("caf.kv_dw.weight"), Tensor(), 1, 2);
    Tensor v = slice(kv, 0, 1, 1);
    Tensor fused = concat({v, f}, 0);
    Tensor manual = conv2d(
        conv2d(conv2d(fused, p.at("caf.fuse1.weight"), p.at("caf.fuse1.bias")),
               p.at("caf.fuse_dw.weight"), p.at("caf.fuse_dw.bias"), 1, 2),
        p.at("caf.fuse2.weight"), p.at("caf.fuse2.bias"));
    CHECK(max_abs_diff(out.data(), manual.data()) < 1e-6);
}

TEST_CASE("fusion block: equals explicit composition of tested pieces") {
    SeedStream rng(250);
    const int C = 6;
    Caf caf(C, rng);
    ParamMap p;
    caf.collect("caf.", p);
    Tensor f = normal_tensor({C, 6, 6}, 251);
    Tensor h = normal_tensor({C, 6, 6}, 252);
    Tensor out = caf.forward(f, h);

    Tensor q = reshape(conv2d(layer_norm(f, p.at("caf.ln_f.gamma"), p.at("caf.ln_f.beta")),
                              p.at("caf.q_conv.weight"), Tensor()),
                       {C, 36});
    Tensor kv = conv2d(conv2d(layer_norm(h, p.at("caf.ln_h.gamma"), p.at("caf.ln_h.beta")),
                              p.at("caf.kv_point.weight"), Tensor()),
                       p.at("caf.kv_dw.weight"), Tensor(), 1, 2 * C);
    Tensor k = reshape(slice(kv, 0, 0, C), {C, 36});
    Tensor v = reshape(slice(kv, 0, C, C), {C, 36});
    Tensor a = softmax(scale_by(matmul(q, transpose(k)), reciprocal(p.at("caf.alpha"))), 1);
    Tensor branch = reshape(matmul(a, v), {C, 6, 6});
    Tensor manual = conv2d(
        conv2d(conv2d(concat({branch, f}, 0), p.at("caf.fuse1.weight"), p.at("caf.fuse1.bias")),
               p.at("caf.fuse_dw.weight"), p.at("caf.fuse_dw.bias"), 1, 2 * C),
        p.at("caf.fuse2.weight"), p.at("caf.fuse2.bias"));
    CHECK(max_abs_diff(out.data(), manual.data()) < 1e-6);
}

TEST_CASE("fusion block: gradient vs finite differences") {
    SeedStream rng(260);
    Caf caf(4, rng);
    CHECK(fd_check(
              [&caf](const std::vector<Tensor>& in) { return caf.forward(in[0], in[1]); },
              {random_tensor({4, 5, 5}, 261), random_tensor({4, 5, 5}, 262)})
              .pass());
}

TEST_CASE("gated feed-forward: zero gate reduces to identity") {
    SeedStream rng(270);
    Gdfn g(4, rng);
    ParamMap p;
    g.collect("g.", p);
    // zero the expand rows that produce the gate half
    auto& ew = p.at("g.expand.weight").leaf_data();
    const std::size_t half = ew.size() / 2;
    std::fill(ew.begin(), ew.begin() + static_cast<std::ptrdiff_t>(half), 0.0f);
    Tensor x = normal_tensor({4, 5, 5}, 271);
    Tensor y = g.forward(x);
    CHECK(max_abs_diff(y.data(), x.data()) == 0.0);
}

TEST_CASE("gated feed-forward: shape and gradient") {
    SeedStream rng(280);
    Gdfn g(6, rng);
    Tensor x = normal_tensor({6, 7, 5}, 281);
    CHECK(g.forward(x).shape() == x.shape());
    CHECK(fd_check([&g](const std::vector<Tensor>& in) { return g.forward(in[0]); },
                   {random_tensor({6, 4, 4}, 282)})
              .pass());
}

TEST_CASE("parameter names carry block prefixes") {
    SeedStream rng(290);
    AttentionConfig cfg = base_cfg(8, 8);
    cfg.squeeze_ratio = 4;
    Ica ica(cfg, rng);
    Caf caf(8, rng);
    ParamMap p;
    ica.collect("ica.", p);
    caf.collect("caf.", p);
    CHECK(p.count("ica.squeeze.weight") == 1);
    CHECK(p.count("ica.excite.weight") == 1);
    CHECK(p.count("ica.attn.alpha") == 1);
    CHECK(p.count("ica.rescale.l2.weight") == 1);
    CHECK(p.count("caf.q_conv.weight") == 1);
    CHECK(p.count("caf.alpha") == 1);
    CHECK(p.count("caf.fuse2.bias") == 1);
    for (const auto& [name, t] : p) CHECK(t.requires_grad());
}
