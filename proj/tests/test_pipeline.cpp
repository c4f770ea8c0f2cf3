#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

#include "rvf/checkpoint.hpp"
#include "rvf/degrade.hpp"
#include "rvf/flow.hpp"
#include "rvf/metrics.hpp"
#include "rvf/model.hpp"
#include "rvf/probes.hpp"
#include "rvf/train.hpp"
#include "testutil.hpp"

using namespace rvf;
using rvftest::random_tensor;

namespace {

bool same_bits(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data().data(), b.data().data(),
                       a.data().size() * sizeof(float)) == 0;
}

// Smooth textured frame: seeded noise softened by a small blur.
Tensor textured_frame(int h, int w, std::uint64_t seed) {
    return gaussian_blur(random_tensor({3, h, w}, seed, 0.0f, 1.0f), 1.0);
}

// Band-limited frame: a few random sinusoids per channel plus a pinch of
// pixel grain, the texture class the sensitivity probes are designed for.
Tensor wave_frame(int h, int w, std::uint64_t seed, double grain) {
    SeedStream rng(seed);
    std::vector<float> v(static_cast<std::size_t>(3 * h * w), 0.0f);
    for (int c = 0; c < 3; ++c)
        for (int k = 0; k < 6; ++k) {
            const double fx = rng.uniform(-0.35, 0.35);
            const double fy = rng.uniform(-0.35, 0.35);
            const double ph = rng.uniform(0.0, 6.28318530717958647692);
            const double amp = rng.uniform(0.05, 0.25);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    v[static_cast<std::size_t>((c * h + y) * w + x)] += static_cast<float>(
                        amp * std::sin(6.28318530717958647692 * (fx * x + fy * y) + ph));
        }
    SeedStream grng(seed ^ 0x9e3779b97f4a7c15ull);
    for (auto& x : v) {
        const double base = std::clamp(0.5 + static_cast<double>(x), 0.0, 1.0);
        const double g = grng.uniform(0.0, 1.0);
        x = static_cast<float>(std::clamp((1.0 - grain) * base + grain * g, 0.0, 1.0));
    }
    return Tensor::from_data({3, h, w}, std::move(v));
}

// curr(y, x) = prev(y + dy, x + dx), clamped at the borders.
Tensor shift_frame(const Tensor& prev, int dy, int dx) {
    const int c = prev.extent(0), h = prev.extent(1), w = prev.extent(2);
    std::vector<float> d(prev.data().size());
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int sy = std::clamp(y + dy, 0, h - 1);
                const int sx = std::clamp(x + dx, 0, w - 1);
                d[static_cast<std::size_t>((ch * h + y) * w + x)] =
                    prev.data()[static_cast<std::size_t>((ch * h + sy) * w + sx)];
            }
    return Tensor::from_data(prev.shape(), std::move(d));
}

ModelConfig small_config() {
    ModelConfig cfg;
    cfg.levels = 2;
    cfg.blocks_per_level = {1, 1};
    cfg.channels_per_level = {8, 16};
    cfg.heads_per_level = {1, 2};
    cfg.squeeze_ratio = 4;
    cfg.window = 4;
    cfg.scale = 4;
    cfg.fusion = "channel";
    cfg.block_kind = "ica";
    return cfg;
}

double max_abs(const Tensor& t) {
    double m = 0.0;
    for (float v : t.data()) m = std::max(m, std::fabs(static_cast<double>(v)));
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Flow estimation
// ---------------------------------------------------------------------------

TEST_CASE("estimate_flow: identical and constant frames give zero flow") {
    Tensor f = textured_frame(16, 16, 1);
    Tensor flow = estimate_flow(f, f);
    REQUIRE(flow.shape() == Shape{2, 16, 16});
    for (float v : flow.data()) CHECK(v == 0.0f);

    Tensor c = Tensor::full({3, 16, 16}, 0.5f);
    Tensor cflow = estimate_flow(c, c);
    for (float v : cflow.data()) CHECK(v == 0.0f);
}

TEST_CASE("estimate_flow: recovers a global shift in the interior") {
    Tensor prev = random_tensor({3, 24, 24}, 7, 0.0f, 1.0f);
    Tensor curr = shift_frame(prev, 2, 1);
    Tensor flow = estimate_flow(prev, curr);
    // The central block is fully interior for every candidate displacement.
    const int y = 12, x = 12;
    CHECK(flow.data()[static_cast<std::size_t>(y * 24 + x)] == 1.0f);       // dx
    CHECK(flow.data()[static_cast<std::size_t>(24 * 24 + y * 24 + x)] == 2.0f);  // dy
}

TEST_CASE("estimate_flow: agrees with an exhaustive SAD search") {
    Tensor prev = random_tensor({3, 24, 24}, 8, 0.0f, 1.0f);
    Tensor curr = shift_frame(prev, -1, 3);
    Tensor flow = estimate_flow(prev, curr);

    // Re-derive the winner for the central 8x8 block by brute force on luma.
    auto luma = [&](const Tensor& t, int y, int x) {
        y = std::clamp(y, 0, 23);
        x = std::clamp(x, 0, 23);
        const std::size_t p = static_cast<std::size_t>(y * 24 + x);
        return 0.299 * t.data()[p] + 0.587 * t.data()[576 + p] + 0.114 * t.data()[1152 + p];
    };
    double best = 1e30;
    int bdy = 0, bdx = 0;
    for (int dy = -4; dy <= 4; ++dy)
        for (int dx = -4; dx <= 4; ++dx) {
            double sad = 0.0;
            for (int y = 8; y < 16; ++y)
                for (int x = 8; x < 16; ++x)
                    sad += std::fabs(luma(curr, y, x) - luma(prev, y + dy, x + dx));
            if (sad < best) {
                best = sad;
                bdy = dy;
                bdx = dx;
            }
        }
    CHECK(bdy == -1);
    CHECK(bdx == 3);
    CHECK(flow.data()[static_cast<std::size_t>(10 * 24 + 10)] == static_cast<float>(bdx));
    CHECK(flow.data()[static_cast<std::size_t>(576 + 10 * 24 + 10)] == static_cast<float>(bdy));
}

TEST_CASE("estimate_flow: periodic patterns resolve to zero displacement") {
    std::vector<float> d(3 * 16 * 16);
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = static_cast<float>(((i / 16 + i % 16) % 2));  // checkerboard
    }
    Tensor f = Tensor::from_data({3, 16, 16}, std::move(d));
    Tensor flow = estimate_flow(f, f);
    for (float v : flow.data()) CHECK(v == 0.0f);
}

// ---------------------------------------------------------------------------
// Model construction and shape contracts
// ---------------------------------------------------------------------------

TEST_CASE("model config: invalid settings are rejected with clear errors") {
    ModelConfig cfg = small_config();
    cfg.fusion = "telepathy";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.blocks_per_level = {1};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.scale = 3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.heads_per_level = {1, 3};  // 16/4 squeezed channels not divisible by 3
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_NOTHROW(small_config().validate());
}

TEST_CASE("model: step honors the output shape contract") {
    Model m(small_config(), 11);
    Tensor frame = textured_frame(8, 8, 2);
    Tensor hidden;
    Tensor sr = m.step(frame, Tensor(), hidden);
    CHECK(sr.shape() == Shape{3, 32, 32});
    CHECK(hidden.shape() == Shape{8, 8, 8});
    CHECK(all_finite(sr));
    CHECK(all_finite(hidden));
}

TEST_CASE("model: fresh model with zero hidden state is exactly bicubic") {
    // The 3-channel output conv starts at zero, so the only contribution is
    // the global residual.
    for (const char* fusion : {"concat", "spatial", "channel"}) {
        ModelConfig cfg = small_config();
        cfg.fusion = fusion;
        Model m(cfg, 17);
        Tensor frame = textured_frame(8, 8, 3);
        Tensor hidden;
        Tensor sr = m.step(frame, Tensor(), hidden);
        CHECK(same_bits(sr, resize_bicubic(frame, 4.0)));
    }
}

TEST_CASE("model: every fusion and block kind builds and runs") {
    Tensor frame = textured_frame(8, 8, 4);
    for (const char* fusion : {"concat", "spatial", "channel"}) {
        for (const char* kind : {"conv", "spatial-attn", "channel-attn", "ica"}) {
            ModelConfig cfg = small_config();
            cfg.fusion = fusion;
            cfg.block_kind = kind;
            Model m(cfg, 23);
            Tensor hidden;
            Tensor sr = m.step(frame, Tensor(), hidden);
            CHECK(sr.shape() == Shape{3, 32, 32});
            CHECK(all_finite(sr));
        }
    }
}

TEST_CASE("model: identical seeds build identical parameters") {
    Model a(small_config(), 5), b(small_config(), 5), c(small_config(), 6);
    ParamMap pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
    REQUIRE(pa.size() == pb.size());
    bool all_equal = true, any_differs = false;
    for (const auto& [name, t] : pa) {
        all_equal = all_equal && same_bits(t, pb.at(name));
        any_differs = any_differs || !same_bits(t, pc.at(name));
    }
    CHECK(all_equal);
    CHECK(any_differs);
}

// ---------------------------------------------------------------------------
// Sequence inference
// ---------------------------------------------------------------------------

TEST_CASE("run_sequence: shape contract with internal padding of odd sizes") {
    Model m(small_config(), 31);
    std::vector<Tensor> frames = {textured_frame(10, 9, 5), textured_frame(10, 9, 6),
                                  textured_frame(10, 9, 7)};
    std::vector<Tensor> out = m.run_sequence(frames);
    REQUIRE(out.size() == 3);
    for (const Tensor& f : out) {
        CHECK(f.shape() == Shape{3, 40, 36});
        for (float v : f.data()) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("run_sequence: single frame equals one plain step") {
    Model m(small_config(), 37);
    Tensor frame = textured_frame(8, 8, 8);
    std::vector<Tensor> out = m.run_sequence({frame});
    Tensor hidden;
    Tensor sr = m.step(frame, Tensor(), hidden);
    CHECK(same_bits(out[0], clamp01(sr)));
}

TEST_CASE("run_sequence: outputs are causal in the input frames") {
    Model m(small_config(), 41);
    Tensor f1 = textured_frame(8, 8, 10);
    Tensor f2 = textured_frame(8, 8, 11);
    Tensor f3 = textured_frame(8, 8, 12);
    Tensor g3 = textured_frame(8, 8, 13);
    std::vector<Tensor> a = m.run_sequence({f1, f2, f3});
    std::vector<Tensor> b = m.run_sequence({f1, f2, g3});
    CHECK(same_bits(a[0], b[0]));
    CHECK(same_bits(a[1], b[1]));
    CHECK(!same_bits(a[2], b[2]));
}

TEST_CASE("run_sequence: reruns are bit-identical") {
    Model m(small_config(), 43);
    std::vector<Tensor> frames = {textured_frame(8, 8, 20), textured_frame(8, 8, 21)};
    std::vector<Tensor> a = m.run_sequence(frames);
    std::vector<Tensor> b = m.run_sequence(frames);
    for (std::size_t t = 0; t < a.size(); ++t) CHECK(same_bits(a[t], b[t]));
}

TEST_CASE("model: 50-frame constant rollout keeps the hidden state bounded") {
    Model m(small_config(), 47);
    Tensor frame = Tensor::full({3, 8, 8}, 0.5f);
    NoGradGuard guard;
    Tensor hidden;
    double early = 0.0, late = 0.0;
    for (int t = 0; t < 50; ++t) {
        Tensor aligned;
        if (hidden.defined()) {
            Tensor flow = estimate_flow(frame, frame);  // zero by tie-break
            aligned = bilinear_warp(hidden, flow);
        }
        m.step(frame, aligned, hidden);
        REQUIRE(all_finite(hidden));
        const double mag = max_abs(hidden);
        if (t < 10) early = std::max(early, mag);
        if (t >= 40) late = std::max(late, mag);
    }
    CHECK(late < 2.0 * early + 1.0);
}

// ---------------------------------------------------------------------------
// Structural equality with the straight-line baseline
// ---------------------------------------------------------------------------

TEST_CASE("degenerate model matches the independent baseline construction") {
    ModelConfig cfg = small_config();
    cfg.fusion = "concat";
    cfg.block_kind = "conv";
    Model m(cfg, 3);
    BaselineCell base(cfg, 4);

    std::int64_t m_count = 0, b_count = 0;
    for (const auto& [n, t] : m.parameters()) m_count += t.numel();
    for (const auto& [n, t] : base.parameters()) b_count += t.numel();
    CHECK(m_count == b_count);

    Tensor frame = textured_frame(8, 8, 30);
    Tensor hm, hb;
    Tensor sm = m.step(frame, Tensor(), hm);
    Tensor sb = base.step(frame, Tensor(), hb);
    CHECK(graph_op_sequence(sm) == graph_op_sequence(sb));
    CHECK(sm.shape() == sb.shape());
}

// ---------------------------------------------------------------------------
// Gradient flow through the full model
// ---------------------------------------------------------------------------

TEST_CASE("model: finite-difference check through a full step") {
    ModelConfig cfg;
    cfg.levels = 2;
    cfg.blocks_per_level = {1, 1};
    cfg.channels_per_level = {4, 8};
    cfg.heads_per_level = {1, 1};
    cfg.squeeze_ratio = 2;
    cfg.window = 2;
    cfg.scale = 2;
    cfg.fusion = "channel";
    cfg.block_kind = "ica";
    Model m(cfg, 53);

    Tensor frame = random_tensor({3, 4, 4}, 61, 0.1f, 0.9f);
    Tensor h_prev = random_tensor({4, 4, 4}, 62, -0.5f, 0.5f);
    ParamMap params = m.parameters();
    // The output conv starts at zero (identity-to-bicubic init), which would
    // zero every internal gradient; give it nonzero values first.
    for (const char* name : {"out.weight", "out.bias"}) {
        Tensor t = params.at(name);
        SeedStream ss(derive_seed(77, name));
        for (float& v : t.leaf_data()) {
            v = static_cast<float>(ss.uniform(-0.2, 0.2));
        }
    }
    std::vector<Tensor> inputs = {frame, h_prev, params.at("embed.weight"),
                                  params.at("fuse.caf.alpha"),
                                  params.at("enc0.b0.ica.squeeze.weight"),
                                  params.at("dec0.b0.gdfn.expand.weight"),
                                  params.at("upsample0.bias")};
    auto f = [&](const std::vector<Tensor>& in) {
        Tensor hidden;
        return m.step(in[0], in[1], hidden);
    };
    rvftest::FdReport rep = rvftest::fd_check(f, inputs, 6);
    INFO("max_rel=", rep.max_rel, " tight=", rep.tight, "/", rep.total,
         " scale=", rep.scale);
    CHECK(rep.pass());
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

TEST_CASE("checkpoint: save/load round-trips config, step, and every tensor") {
    Model m(small_config(), 59);
    Checkpoint ck;
    ck.config = m.config();
    ck.step = 7;
    for (const auto& [name, t] : m.parameters()) {
        ck.params[name] = Tensor::from_data(t.shape(), t.data());
    }
    const std::string path = "ckpt_roundtrip.bin";
    save_checkpoint(path, ck);
    Checkpoint back = load_checkpoint(path);
    CHECK(back.config == ck.config);
    CHECK(back.step == 7);
    REQUIRE(back.params.size() == ck.params.size());
    for (const auto& [name, t] : ck.params) {
        CHECK(same_bits(t, back.params.at(name)));
    }
    std::remove(path.c_str());
}

TEST_CASE("checkpoint: parameter names expose the fusion and block structure") {
    Model m(small_config(), 59);
    ParamMap p = m.parameters();
    CHECK(p.count("fuse.caf.q_conv.weight") == 1);
    CHECK(p.count("fuse.caf.alpha") == 1);
    CHECK(p.count("enc0.b0.ica.squeeze.weight") == 1);
    CHECK(p.count("out.weight") == 1);
    for (const auto& [name, t] : p) CHECK(t.requires_grad());
}

TEST_CASE("checkpoint: restored model reproduces outputs bit for bit") {
    Model m(small_config(), 61);
    Checkpoint ck;
    ck.config = m.config();
    for (const auto& [name, t] : m.parameters()) {
        ck.params[name] = Tensor::from_data(t.shape(), t.data());
    }
    const std::string path = "ckpt_forward.bin";
    save_checkpoint(path, ck);
    Model restored = model_from_checkpoint(load_checkpoint(path));
    std::vector<Tensor> frames = {textured_frame(8, 8, 70), textured_frame(8, 8, 71)};
    std::vector<Tensor> a = m.run_sequence(frames);
    std::vector<Tensor> b = restored.run_sequence(frames);
    for (std::size_t t = 0; t < a.size(); ++t) CHECK(same_bits(a[t], b[t]));
    std::remove(path.c_str());
}

TEST_CASE("checkpoint: corrupt files are rejected") {
    const std::string path = "ckpt_bad.bin";
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("NOPE", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_checkpoint("missing_dir/nothing.bin"), IoError);
}

// ---------------------------------------------------------------------------
// Training machinery
// ---------------------------------------------------------------------------

TEST_CASE("optimizer: one plain gradient step on a scalar quadratic") {
    Tensor w = Tensor::from_data({1}, {0.0f}, true);
    ParamMap pm = {{"w", w}};
    Tensor d = add_scalar(w, -3.0f);
    Tensor loss = mul_scalar(mul(d, d), 0.5f);
    loss.backward();
    OptimizerConfig oc;
    oc.kind = "sgd";
    oc.lr = 0.1;
    oc.momentum = 0.0;
    Optimizer opt(oc);
    opt.step(pm);
    CHECK(w.data()[0] == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("optimizer: adaptive step moves by roughly the learning rate") {
    Tensor w = Tensor::from_data({1}, {0.0f}, true);
    ParamMap pm = {{"w", w}};
    Tensor d = add_scalar(w, -3.0f);
    Tensor loss = mul_scalar(mul(d, d), 0.5f);
    loss.backward();
    OptimizerConfig oc;
    oc.kind = "adam";
    oc.lr = 0.1;
    Optimizer opt(oc);
    opt.step(pm);
    CHECK(w.data()[0] == doctest::Approx(0.1).epsilon(1e-5));
    CHECK_THROWS_AS(Optimizer(OptimizerConfig{"frobnicate", 0.1}), ConfigError);
}

TEST_CASE("losses: fixed points and gradient flow") {
    Tensor x = random_tensor({3, 12, 12}, 80, 0.1f, 0.9f);
    CHECK(charbonnier_loss(x, x).item() == doctest::Approx(1e-3).epsilon(1e-4));
    CHECK(ssim_penalty(x, x).item() == doctest::Approx(0.0).epsilon(1e-6));
    Tensor y = random_tensor({3, 12, 12}, 81, 0.1f, 0.9f);
    CHECK(ssim_penalty(x, y).item() > 0.0f);
    CHECK(charbonnier_loss(x, y).item() > 1e-3f);

    auto f = [&](const std::vector<Tensor>& in) {
        return stage1_loss(in[0], y, 1e-3f, 0.001f);
    };
    rvftest::FdReport rep = rvftest::fd_check(f, {x}, 24);
    INFO("max_rel=", rep.max_rel, " tight=", rep.tight, "/", rep.total);
    CHECK(rep.pass());
}

TEST_CASE("train_stage1: short run keeps finite losses and snapshots the model") {
    ModelConfig cfg;
    cfg.levels = 1;
    cfg.blocks_per_level = {1};
    cfg.channels_per_level = {8};
    cfg.heads_per_level = {1};
    cfg.squeeze_ratio = 4;
    cfg.window = 4;
    cfg.scale = 2;
    cfg.fusion = "channel";
    cfg.block_kind = "ica";
    Model m(cfg, 71);

    TrainSample sample;
    Tensor hr0 = textured_frame(16, 16, 90);
    Tensor hr1 = shift_frame(hr0, 1, 0);
    sample.hr = {hr0, hr1};
    sample.lr = {resize_bicubic(hr0, 0.5), resize_bicubic(hr1, 0.5)};

    TrainConfig tc;
    tc.steps = 5;
    tc.opt.kind = "adam";
    tc.opt.lr = 1e-3;
    TrainResult r = train_stage1(m, {sample}, tc);
    REQUIRE(r.loss_trace.size() == 5);
    for (double v : r.loss_trace) CHECK(std::isfinite(v));
    CHECK(r.ckpt.step == 5);

    // The snapshot reproduces the trained model's outputs exactly.
    const std::string path = "ckpt_trained.bin";
    save_checkpoint(path, r.ckpt);
    Model restored = model_from_checkpoint(load_checkpoint(path));
    std::vector<Tensor> a = m.run_sequence(sample.lr);
    std::vector<Tensor> b = restored.run_sequence(sample.lr);
    for (std::size_t t = 0; t < a.size(); ++t) CHECK(same_bits(a[t], b[t]));
    std::remove(path.c_str());

    CHECK_THROWS_AS(train_stage1(m, {}, tc), TrainError);
    TrainSample bad = sample;
    bad.hr.pop_back();
    CHECK_THROWS_AS(train_stage1(m, {bad}, tc), TrainError);
}

// ---------------------------------------------------------------------------
// Probes
// ---------------------------------------------------------------------------

TEST_CASE("attention_sensitivity: identity degradation scores exactly one") {
    ToyEncoder enc(101);
    Tensor prev = textured_frame(16, 16, 100);
    Tensor curr = shift_frame(prev, 0, 1);
    DegradationSpec ident;
    ident.kind = "identity";
    CHECK(attention_sensitivity("channel", enc, curr, prev, ident, 9) == 1.0);
    CHECK(attention_sensitivity("spatial", enc, curr, prev, ident, 9) == 1.0);
    CHECK_THROWS_AS(attention_sensitivity("psychic", enc, curr, prev, ident, 9),
                    ParamError);
}

TEST_CASE("attention_sensitivity: deterministic given seed and inputs") {
    ToyEncoder enc(103);
    Tensor prev = textured_frame(16, 16, 110);
    Tensor curr = shift_frame(prev, 1, 0);
    DegradationSpec blur;
    blur.kind = "blur";
    blur.blur_sigma = 2.0;
    const double a = attention_sensitivity("channel", enc, curr, prev, blur, 13);
    const double b = attention_sensitivity("channel", enc, curr, prev, blur, 13);
    CHECK(a == b);
    CHECK(a > -1.0);
    CHECK(a < 1.0);
}

TEST_CASE("sensitivity_table: three degradations, channel less sensitive on blur") {
    std::vector<std::pair<Tensor, Tensor>> pairs;
    for (std::uint64_t i = 0; i < 8; ++i) {
        Tensor prev = wave_frame(32, 32, 4200 + i, 0.15);
        pairs.emplace_back(prev, shift_frame(prev, 1, 1));
    }
    std::vector<SensitivityRow> rows = sensitivity_table(pairs, 42);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].degradation == "blur");
    CHECK(rows[1].degradation == "noise");
    CHECK(rows[2].degradation == "jpeg");
    for (const SensitivityRow& r : rows) {
        CHECK(r.s_spatial >= -1.0);
        CHECK(r.s_spatial <= 1.0);
        CHECK(r.s_channel >= -1.0);
        CHECK(r.s_channel <= 1.0);
    }
    CHECK(rows[0].s_channel > rows[0].s_spatial);
}

TEST_CASE("covariance_probe: channel attention raises cross-channel covariance") {
    std::vector<Tensor> inputs;
    for (std::uint64_t i = 0; i < 16; ++i) {
        inputs.push_back(random_tensor({8, 8, 8}, 300 + i, -1.0f, 1.0f));
    }
    CovarianceProbe p = covariance_probe(inputs, 23);
    CHECK(p.channel_ac > p.input_ac);
    CHECK(p.channel_ac > p.spatial_ac);
    CHECK_THROWS_AS(covariance_probe({inputs[0]}, 23), ParamError);
}
