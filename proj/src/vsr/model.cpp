#include "rvf/model.hpp"

#include <algorithm>

#include "rvf/common.hpp"
#include "rvf/degrade.hpp"
#include "rvf/flow.hpp"

namespace rvf {

namespace {

void zero_leaf(const Tensor& t) {
    if (!t.defined()) return;
    Tensor h = t;  // handles share storage
    std::fill(h.leaf_data().begin(), h.leaf_data().end(), 0.0f);
}

AttentionConfig block_attention_config(int channels, int heads, int squeeze_ratio,
                                       int window) {
    AttentionConfig a;
    a.heads = heads;
    a.dim = channels;
    a.key_dim = channels;
    a.proj_dim = channels;
    a.window = window;
    a.squeeze_ratio = squeeze_ratio;
    return a;
}

}  // namespace

void ModelConfig::validate() const {
    if (levels < 1) throw ConfigError("model: levels must be >= 1");
    const std::size_t n = static_cast<std::size_t>(levels);
    if (blocks_per_level.size() != n || channels_per_level.size() != n ||
        heads_per_level.size() != n) {
        throw ConfigError("model: per-level lists must each have `levels` entries");
    }
    if (scale != 2 && scale != 4) {
        throw ConfigError("model: scale must be 2 or 4, got " + std::to_string(scale));
    }
    if (window < 1) throw ConfigError("model: window must be >= 1");
    if (squeeze_ratio < 1) throw ConfigError("model: squeeze ratio must be >= 1");
    if (fusion != "concat" && fusion != "spatial" && fusion != "channel") {
        throw ConfigError("model: unknown fusion '" + fusion + "'");
    }
    if (block_kind != "conv" && block_kind != "spatial-attn" &&
        block_kind != "channel-attn" && block_kind != "ica") {
        throw ConfigError("model: unknown block kind '" + block_kind + "'");
    }
    for (int l = 0; l < levels; ++l) {
        const int c = channels_per_level[static_cast<std::size_t>(l)];
        const int h = heads_per_level[static_cast<std::size_t>(l)];
        const int b = blocks_per_level[static_cast<std::size_t>(l)];
        if (c < 1 || h < 1 || b < 0) {
            throw ConfigError("model: level " + std::to_string(l) +
                              " has non-positive channels/heads/blocks");
        }
        if (block_kind == "spatial-attn" || block_kind == "channel-attn") {
            if (c % h != 0) {
                throw ConfigError("model: heads " + std::to_string(h) +
                                  " must divide channels " + std::to_string(c) +
                                  " at level " + std::to_string(l));
            }
        }
        if (block_kind == "ica") {
            if (c % squeeze_ratio != 0) {
                throw ConfigError("model: squeeze ratio " + std::to_string(squeeze_ratio) +
                                  " must divide channels " + std::to_string(c) +
                                  " at level " + std::to_string(l));
            }
            if ((c / squeeze_ratio) % h != 0) {
                throw ConfigError("model: heads " + std::to_string(h) +
                                  " must divide squeezed channels " +
                                  std::to_string(c / squeeze_ratio) + " at level " +
                                  std::to_string(l));
            }
        }
    }
    if (fusion == "spatial" &&
        channels_per_level[0] % heads_per_level[0] != 0) {
        throw ConfigError("model: fusion heads must divide first-level channels");
    }
}

// ---------------------------------------------------------------------------
// RecBlock
// ---------------------------------------------------------------------------

RecBlock::RecBlock(const std::string& kind, int channels, int heads,
                   int squeeze_ratio, int window, SeedStream& rng)
    : kind_(kind) {
    if (kind_ == "conv") {
        c1_ = Conv2d(channels, channels, 3, rng);
        c2_ = Conv2d(channels, channels, 3, rng);
        return;
    }
    if (kind_ == "spatial-attn") {
        swa_ = SpatialWindowAttention(block_attention_config(channels, heads, 1, window), rng);
    } else if (kind_ == "channel-attn") {
        ca_ = ChannelAttention(block_attention_config(channels, heads, 1, window), rng);
    } else if (kind_ == "ica") {
        ica_ = Ica(block_attention_config(channels, heads, squeeze_ratio, window), rng);
    } else {
        throw ConfigError("block: unknown kind '" + kind_ + "'");
    }
    gdfn_ = Gdfn(channels, rng);
}

Tensor RecBlock::forward(const Tensor& x) const {
    if (kind_ == "conv") {
        return add(x, c2_.forward(relu(c1_.forward(x))));
    }
    Tensor mixed;
    if (kind_ == "spatial-attn") {
        mixed = add(x, swa_.forward(x, x).features);
    } else if (kind_ == "channel-attn") {
        mixed = add(x, ca_.forward(x, x).features);
    } else {
        mixed = ica_.forward(x);  // residual applied inside
    }
    return gdfn_.forward(mixed);  // residual applied inside
}

void RecBlock::collect(const std::string& prefix, ParamMap& out) const {
    if (kind_ == "conv") {
        c1_.collect(prefix + "c1.", out);
        c2_.collect(prefix + "c2.", out);
        return;
    }
    if (kind_ == "spatial-attn") {
        swa_.collect(prefix + "swa.", out);
    } else if (kind_ == "channel-attn") {
        ca_.collect(prefix + "ca.", out);
    } else {
        ica_.collect(prefix + "ica.", out);
    }
    gdfn_.collect(prefix + "gdfn.", out);
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

Model::Model(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    SeedStream rng(derive_seed(init_seed, "model"));
    const std::vector<int>& ch = cfg_.channels_per_level;
    const int c0 = ch[0];

    shallow_ = Conv2d(3, c0, 3, rng);
    if (cfg_.fusion == "concat") {
        concat_fuse_ = Conv2d(2 * c0, c0, 1, rng);
    } else if (cfg_.fusion == "spatial") {
        spatial_fuse_ = SpatialWindowAttention(
            block_attention_config(c0, cfg_.heads_per_level[0], 1, cfg_.window), rng);
        spatial_fuse_proj_ = Conv2d(2 * c0, c0, 1, rng);
    } else {
        caf_ = Caf(c0, rng);
    }

    enc_blocks_.resize(static_cast<std::size_t>(cfg_.levels));
    for (int l = 0; l < cfg_.levels; ++l) {
        for (int b = 0; b < cfg_.blocks_per_level[static_cast<std::size_t>(l)]; ++b) {
            enc_blocks_[static_cast<std::size_t>(l)].emplace_back(
                cfg_.block_kind, ch[static_cast<std::size_t>(l)],
                cfg_.heads_per_level[static_cast<std::size_t>(l)], cfg_.squeeze_ratio,
                cfg_.window, rng);
        }
        if (l + 1 < cfg_.levels) {
            down_.emplace_back(ch[static_cast<std::size_t>(l)],
                               ch[static_cast<std::size_t>(l + 1)], 3, rng, true, 2);
        }
    }
    dec_blocks_.resize(static_cast<std::size_t>(std::max(0, cfg_.levels - 1)));
    up_.resize(dec_blocks_.size());
    skip_merge_.resize(dec_blocks_.size());
    for (int l = cfg_.levels - 2; l >= 0; --l) {
        up_[static_cast<std::size_t>(l)] =
            Conv2d(ch[static_cast<std::size_t>(l + 1)], 4 * ch[static_cast<std::size_t>(l)], 1, rng);
        skip_merge_[static_cast<std::size_t>(l)] =
            Conv2d(2 * ch[static_cast<std::size_t>(l)], ch[static_cast<std::size_t>(l)], 1, rng);
        for (int b = 0; b < cfg_.blocks_per_level[static_cast<std::size_t>(l)]; ++b) {
            dec_blocks_[static_cast<std::size_t>(l)].emplace_back(
                cfg_.block_kind, ch[static_cast<std::size_t>(l)],
                cfg_.heads_per_level[static_cast<std::size_t>(l)], cfg_.squeeze_ratio,
                cfg_.window, rng);
        }
    }

    const int stages = cfg_.scale == 4 ? 2 : 1;
    for (int s = 0; s < stages; ++s) {
        up_stages_.emplace_back(c0, 4 * c0, 3, rng);
    }
    out_conv_ = Conv2d(c0, 3, 3, rng);
    // Start as the pure bicubic-residual identity.
    zero_leaf(out_conv_.weight());
    zero_leaf(out_conv_.bias());
}

Tensor Model::embed(const Tensor& frame) const { return shallow_.forward(frame); }

Tensor Model::fuse(const Tensor& f, const Tensor& h_warped) const {
    if (cfg_.fusion == "concat") {
        return concat_fuse_.forward(concat({f, h_warped}, 0));
    }
    if (cfg_.fusion == "spatial") {
        Tensor attended = spatial_fuse_.forward(f, h_warped).features;
        return spatial_fuse_proj_.forward(concat({attended, f}, 0));
    }
    return caf_.forward(f, h_warped);
}

Tensor Model::reconstruct(const Tensor& fused) const {
    const int m = 1 << (cfg_.levels - 1);
    if (fused.extent(1) % m != 0 || fused.extent(2) % m != 0) {
        throw ShapeError("reconstruct: spatial extents " + shape_str(fused.shape()) +
                         " must be divisible by " + std::to_string(m));
    }
    Tensor x = fused;
    std::vector<Tensor> skips;
    for (int l = 0; l < cfg_.levels; ++l) {
        for (const RecBlock& b : enc_blocks_[static_cast<std::size_t>(l)]) {
            x = b.forward(x);
        }
        if (l + 1 < cfg_.levels) {
            skips.push_back(x);
            x = down_[static_cast<std::size_t>(l)].forward(x);
        }
    }
    for (int l = cfg_.levels - 2; l >= 0; --l) {
        x = pixel_shuffle(up_[static_cast<std::size_t>(l)].forward(x), 2);
        x = skip_merge_[static_cast<std::size_t>(l)].forward(
            concat({x, skips[static_cast<std::size_t>(l)]}, 0));
        for (const RecBlock& b : dec_blocks_[static_cast<std::size_t>(l)]) {
            x = b.forward(x);
        }
    }
    return x;
}

Tensor Model::upsample(const Tensor& h, const Tensor& frame) const {
    Tensor x = h;
    for (const Conv2d& stage : up_stages_) {
        x = pixel_shuffle(stage.forward(x), 2);
    }
    x = out_conv_.forward(x);
    Tensor base = resize_bicubic(frame, static_cast<double>(cfg_.scale));
    return add(x, base);
}

Tensor Model::step(const Tensor& frame, const Tensor& h_prev, Tensor& h_out) const {
    Tensor f = embed(frame);
    Tensor hw = h_prev.defined() ? h_prev : Tensor::zeros(f.shape());
    Tensor fused = fuse(f, hw);
    h_out = reconstruct(fused);
    return upsample(h_out, frame);
}

Tensor clamp01(const Tensor& t) {
    std::vector<float> d = t.data();
    for (float& v : d) v = std::clamp(v, 0.0f, 1.0f);
    return Tensor::from_data(t.shape(), std::move(d));
}

std::vector<Tensor> Model::run_sequence(const std::vector<Tensor>& frames) const {
    if (frames.empty()) throw ParamError("run_sequence: empty input");
    for (const Tensor& f : frames) {
        if (f.rank() != 3 || f.extent(0) != 3 || f.shape() != frames[0].shape()) {
            throw ShapeError("run_sequence: frames must all be [3,H,W]");
        }
    }
    NoGradGuard guard;
    const int h = frames[0].extent(1), w = frames[0].extent(2);
    const int m = 1 << (cfg_.levels - 1);
    const int pad_b = (m - h % m) % m;
    const int pad_r = (m - w % m) % m;

    std::vector<Tensor> out;
    out.reserve(frames.size());
    Tensor hidden;
    Tensor prev_pad;
    for (std::size_t t = 0; t < frames.size(); ++t) {
        Tensor cur = frames[t];
        if (pad_b || pad_r) cur = pad_reflect2d(cur, 0, pad_b, 0, pad_r);
        Tensor aligned;
        if (hidden.defined()) {
            Tensor flow = estimate_flow(prev_pad, cur);
            aligned = bilinear_warp(hidden, flow);
        }
        Tensor sr = step(cur, aligned, hidden);
        if (pad_b || pad_r) sr = crop2d(sr, 0, 0, cfg_.scale * h, cfg_.scale * w);
        out.push_back(clamp01(sr));
        prev_pad = cur;
    }
    return out;
}

ParamMap Model::parameters() const {
    ParamMap out;
    shallow_.collect("embed.", out);
    if (cfg_.fusion == "concat") {
        concat_fuse_.collect("fuse.concat.", out);
    } else if (cfg_.fusion == "spatial") {
        spatial_fuse_.collect("fuse.swa.", out);
        spatial_fuse_proj_.collect("fuse.proj.", out);
    } else {
        caf_.collect("fuse.caf.", out);
    }
    for (std::size_t l = 0; l < enc_blocks_.size(); ++l) {
        for (std::size_t b = 0; b < enc_blocks_[l].size(); ++b) {
            enc_blocks_[l][b].collect(
                "enc" + std::to_string(l) + ".b" + std::to_string(b) + ".", out);
        }
    }
    for (std::size_t l = 0; l < down_.size(); ++l) {
        down_[l].collect("down" + std::to_string(l) + ".", out);
    }
    for (std::size_t l = 0; l < dec_blocks_.size(); ++l) {
        up_[l].collect("up" + std::to_string(l) + ".", out);
        skip_merge_[l].collect("skip" + std::to_string(l) + ".", out);
        for (std::size_t b = 0; b < dec_blocks_[l].size(); ++b) {
            dec_blocks_[l][b].collect(
                "dec" + std::to_string(l) + ".b" + std::to_string(b) + ".", out);
        }
    }
    for (std::size_t s = 0; s < up_stages_.size(); ++s) {
        up_stages_[s].collect("upsample" + std::to_string(s) + ".", out);
    }
    out_conv_.collect("out.", out);
    return out;
}

void Model::load_parameters(const ParamMap& params) {
    ParamMap own = parameters();
    if (params.size() != own.size()) {
        throw ConfigError("load_parameters: expected " + std::to_string(own.size()) +
                          " tensors, got " + std::to_string(params.size()));
    }
    for (auto& [name, tensor] : own) {
        auto it = params.find(name);
        if (it == params.end()) {
            throw ConfigError("load_parameters: missing tensor '" + name + "'");
        }
        if (it->second.shape() != tensor.shape()) {
            throw ConfigError("load_parameters: shape mismatch for '" + name + "': " +
                              shape_str(tensor.shape()) + " vs " +
                              shape_str(it->second.shape()));
        }
        Tensor dst = tensor;
        dst.leaf_data() = it->second.data();
    }
}

}  // namespace rvf
