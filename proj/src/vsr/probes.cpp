#include "rvf/probes.hpp"

#include <algorithm>
#include <cmath>

#include "rvf/common.hpp"
#include "rvf/metrics.hpp"

namespace rvf {

ToyEncoder::ToyEncoder(std::uint64_t seed, int width) : width_(width) {
    SeedStream rng(derive_seed(seed, "toy-encoder"));
    c1_ = Conv2d(3, width_, 3, rng);
    c2_ = Conv2d(width_, width_, 3, rng);
}

Tensor ToyEncoder::forward(const Tensor& frame) const {
    NoGradGuard guard;
    // Center-surround front end: random convs on raw pixels are dominated by
    // local brightness, which every pixel shares with its neighbours, so the
    // probe would attend over near-duplicate values. Removing the smooth
    // component first makes features track fine detail the way trained
    // restoration encoders do.
    const Tensor detail = sub(frame, gaussian_blur(frame, 1.0));
    return relu(c2_.forward(relu(c1_.forward(detail))));
}

namespace {

AttentionConfig probe_config(int channels, int window = 8) {
    AttentionConfig a;
    a.heads = 1;
    a.dim = channels;
    a.key_dim = channels;
    a.proj_dim = channels;
    a.window = window;
    a.squeeze_ratio = 1;
    return a;
}

}  // namespace

double attention_sensitivity(const std::string& kind, const ToyEncoder& enc,
                             const Tensor& curr, const Tensor& prev,
                             const DegradationSpec& spec, std::uint64_t attn_seed) {
    if (kind != "spatial" && kind != "channel") {
        throw ParamError("attention_sensitivity: kind must be spatial or channel");
    }
    NoGradGuard guard;
    const Tensor degraded = apply_spec(curr, spec);
    if (degraded.shape() != curr.shape()) {
        throw ParamError("attention_sensitivity: degradation must preserve the frame size");
    }
    const Tensor z_prev = enc.forward(prev);
    const Tensor z_clean = enc.forward(curr);
    const Tensor z_deg = enc.forward(degraded);

    SeedStream rng(derive_seed(attn_seed, "probe-attn"));
    const AttentionConfig cfg = probe_config(enc.width());
    Tensor o_clean, o_deg;
    if (kind == "spatial") {
        SpatialWindowAttention attn(cfg, rng);
        o_clean = attn.forward(z_clean, z_prev).features;
        o_deg = attn.forward(z_deg, z_prev).features;
    } else {
        ChannelAttention attn(cfg, rng);
        // The default temperature of 1 saturates the softmax here: the
        // query-key products sum over every position, so their magnitude
        // grows with the frame area. Calibrate the temperature to the spread
        // of the clean-pass products (clean inputs only, so the degraded
        // frame never influences it) to put the map at a responsive point.
        {
            const Tensor raw = attn.raw_logits(z_clean, z_prev);
            double mean = 0.0, var = 0.0;
            for (float v : raw.data()) mean += v;
            mean /= static_cast<double>(raw.numel());
            for (float v : raw.data()) var += (v - mean) * (v - mean);
            var /= static_cast<double>(raw.numel());
            const float sd = static_cast<float>(std::max(std::sqrt(var), 1e-6));
            Tensor alpha = attn.alpha();
            for (float& a : alpha.leaf_data()) a = sd;
        }
        o_clean = attn.forward(z_clean, z_prev).features;
        o_deg = attn.forward(z_deg, z_prev).features;
    }
    return cosine_similarity(o_clean, o_deg);
}

std::vector<SensitivityRow> sensitivity_table(
    const std::vector<std::pair<Tensor, Tensor>>& frame_pairs, std::uint64_t seed) {
    if (frame_pairs.empty()) {
        throw ParamError("sensitivity_table: no frame pairs supplied");
    }
    std::vector<DegradationSpec> specs(3);
    specs[0].kind = "blur";
    specs[0].blur_sigma = 2.0;
    specs[1].kind = "noise";
    specs[1].noise_sigma = 0.05;
    specs[2].kind = "jpeg";
    specs[2].jpeg_quality = 30;

    const ToyEncoder enc(seed);
    std::vector<SensitivityRow> rows;
    for (std::size_t d = 0; d < specs.size(); ++d) {
        SensitivityRow row;
        row.degradation = specs[d].kind;
        for (std::size_t i = 0; i < frame_pairs.size(); ++i) {
            DegradationSpec spec = specs[d];
            // Independent noise field per clip, reproducible from the top seed.
            spec.seed = derive_seed(seed, static_cast<std::uint64_t>(1000 * d + i));
            const Tensor& prev = frame_pairs[i].first;
            const Tensor& curr = frame_pairs[i].second;
            row.s_spatial += attention_sensitivity("spatial", enc, curr, prev, spec, seed);
            row.s_channel += attention_sensitivity("channel", enc, curr, prev, spec, seed);
        }
        row.s_spatial /= static_cast<double>(frame_pairs.size());
        row.s_channel /= static_cast<double>(frame_pairs.size());
        rows.push_back(row);
    }
    return rows;
}

CovarianceProbe covariance_probe(const std::vector<Tensor>& inputs,
                                 std::uint64_t attn_seed) {
    if (inputs.size() < 2) {
        throw ParamError("covariance_probe: need at least 2 inputs");
    }
    NoGradGuard guard;
    const int channels = inputs[0].extent(0);
    SeedStream rng(derive_seed(attn_seed, "probe-cov"));
    const AttentionConfig cfg = probe_config(channels);
    ChannelAttention chan(cfg, rng);
    SpatialWindowAttention spat(cfg, rng);

    FeatureBatch chan_out, spat_out;
    chan_out.reserve(inputs.size());
    spat_out.reserve(inputs.size());
    for (const Tensor& x : inputs) {
        chan_out.push_back(chan.forward(x, x).features);
        spat_out.push_back(spat.forward(x, x).features);
    }
    CovarianceProbe p;
    p.input_ac = ac_indicator(inputs);
    p.channel_ac = ac_indicator(chan_out);
    p.spatial_ac = ac_indicator(spat_out);
    return p;
}

}  // namespace rvf
