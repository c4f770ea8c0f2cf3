#pragma once

#include "rvf/nn.hpp"

namespace rvf {

struct AttentionConfig {
    int heads = 1;
    int dim = 0;           // query-side channels C
    int key_dim = 0;       // key/value-side channels
    int proj_dim = 0;      // projection width of the spatial form
    int window = 8;        // side length of spatial attention windows
    int squeeze_ratio = 4; // channel compression of the squeezed form

    void validate() const;
};

struct SpatialAttentionOut {
    Tensor features;            // [proj_dim x H x W]
    // Row-stochastic per-window maps, window-major (row of windows, then
    // column), one entry per head within each window.
    std::vector<Tensor> maps;   // each [w^2 x w^2]
};

struct ChannelAttentionOut {
    Tensor features;  // [C x H x W]
    Tensor map;       // [C x key_dim], block-diagonal across heads
};

// Shared core of every channel-attention variant: q[C x N] attends over
// k,v[Ck x N]; logits q k^T are divided by the per-head temperature alpha
// and softmaxed row-wise. heads must divide both C and Ck.
ChannelAttentionOut channel_attention_core(const Tensor& q, const Tensor& k, const Tensor& v,
                                           const Tensor& alpha, int heads);

// Windowed attention over spatial positions: per non-overlapping window,
// positions attend to positions with per-pixel feature vectors as tokens,
// logits scaled by 1/sqrt(head width). Inputs with extents not divisible by
// the window side are reflect-padded, attended, and cropped back.
class SpatialWindowAttention {
public:
    SpatialWindowAttention() = default;
    SpatialWindowAttention(const AttentionConfig& cfg, SeedStream& rng);

    SpatialAttentionOut forward(const Tensor& x, const Tensor& y) const;
    void collect(const std::string& prefix, ParamMap& out) const;
    const AttentionConfig& config() const { return cfg_; }

private:
    AttentionConfig cfg_;
    LayerNorm2d ln_x_, ln_y_;
    Conv2d q_proj_, k_proj_, v_proj_;
};

// Attention over channels: each query channel (a whole flattened feature
// map) attends to key channels; the map is [C x key_dim] rather than
// position-by-position.
class ChannelAttention {
public:
    ChannelAttention() = default;
    ChannelAttention(const AttentionConfig& cfg, SeedStream& rng);

    ChannelAttentionOut forward(const Tensor& x, const Tensor& y) const;
    // Query-key products before temperature and softmax, flattened over heads
    // to [dim, key_dim/heads]; diagnostic hook for probe calibration.
    Tensor raw_logits(const Tensor& x, const Tensor& y) const;
    void collect(const std::string& prefix, ParamMap& out) const;
    const Tensor& alpha() const { return alpha_; }

private:
    AttentionConfig cfg_;
    LayerNorm2d ln_x_, ln_y_;
    Conv2d q_proj_, k_proj_, v_proj_;
    Tensor alpha_;
};

// Maps a square attention map to one weight per row: (row mean, row max)
// through a small MLP and a sigmoid. The last layer starts at zero so every
// weight begins at 0.5.
class RescaleMlp {
public:
    RescaleMlp() = default;
    explicit RescaleMlp(SeedStream& rng);

    Tensor forward(const Tensor& square_map) const;  // [n x n] -> [n]
    void collect(const std::string& prefix, ParamMap& out) const;

private:
    Linear l1_, l2_;
};

// Squeeze -> self channel-attention -> map-derived per-channel rescale ->
// excite, with a residual connection around the whole block.
class Ica {
public:
    Ica() = default;
    Ica(const AttentionConfig& cfg, SeedStream& rng);

    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, ParamMap& out) const;

private:
    AttentionConfig cfg_;
    Conv2d squeeze_, excite_;
    ChannelAttention attn_;
    RescaleMlp rescale_;
};

// Fuses the current frame's shallow feature (query) with the aligned hidden
// state (key/value) through channel attention, then projects the
// concatenation of attention output and query feature back to C channels.
class Caf {
public:
    Caf() = default;
    Caf(int channels, SeedStream& rng);

    Tensor forward(const Tensor& f_t, const Tensor& h_prev) const;
    void collect(const std::string& prefix, ParamMap& out) const;

private:
    int channels_ = 0;
    LayerNorm2d ln_f_, ln_h_;
    Conv2d q_conv_, kv_point_, kv_dw_;
    Tensor alpha_;
    Conv2d fuse1_, fuse_dw_, fuse2_;
};

// Gated feed-forward: expand, depth-wise mix, gate half the channels with
// GELU, project back; residual around the whole block.
class Gdfn {
public:
    Gdfn() = default;
    Gdfn(int channels, SeedStream& rng, float expansion = 2.0f);

    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, ParamMap& out) const;

private:
    LayerNorm2d ln_;
    Conv2d expand_, dw_, proj_;
};

}  // namespace rvf
