#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rvf/attention.hpp"
#include "rvf/nn.hpp"

namespace rvf {

// Restoration network layout. The lists are indexed by encoder level; the
// decoder mirrors levels 0..levels-2. Widths double down the encoder in the
// defaults; arbitrary widths are allowed as long as heads and the squeeze
// ratio divide them.
struct ModelConfig {
    int levels = 3;
    std::vector<int> blocks_per_level{2, 2, 2};
    std::vector<int> channels_per_level{16, 32, 64};
    std::vector<int> heads_per_level{1, 2, 4};
    int squeeze_ratio = 4;
    int window = 8;
    int scale = 4;
    std::string fusion = "channel";  // "concat" | "spatial" | "channel"
    std::string block_kind = "ica";  // "conv" | "spatial-attn" | "channel-attn" | "ica"

    void validate() const;
    bool operator==(const ModelConfig& o) const = default;
};

// One reconstruction unit at a fixed width. "conv" is a plain residual pair;
// the attention kinds pair their mixer with a gated feed-forward.
class RecBlock {
public:
    RecBlock() = default;
    RecBlock(const std::string& kind, int channels, int heads, int squeeze_ratio,
             int window, SeedStream& rng);

    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, ParamMap& out) const;

private:
    std::string kind_;
    Conv2d c1_, c2_;  // conv kind
    SpatialWindowAttention swa_;
    ChannelAttention ca_;
    Ica ica_;
    Gdfn gdfn_;
};

// Recurrent single-frame cell plus upsampler. The hidden state is the full
// output of the reconstruction body at the first-level width.
class Model {
public:
    Model() = default;
    Model(const ModelConfig& cfg, std::uint64_t init_seed);

    const ModelConfig& config() const { return cfg_; }

    // Shallow 3x3 embedding of an input frame to the first-level width.
    Tensor embed(const Tensor& frame) const;
    // Merge the embedded frame with the aligned previous hidden state.
    Tensor fuse(const Tensor& f, const Tensor& h_warped) const;
    // U-shaped encoder-decoder over the fused feature; returns the new hidden
    // state (same shape as the fused input).
    Tensor reconstruct(const Tensor& fused) const;
    // Hidden state to an HR frame: conv+pixel-shuffle stages, a 3-channel
    // projection that starts at zero, and the bicubic upsample of the input
    // frame as a global residual. Not clipped here.
    Tensor upsample(const Tensor& h, const Tensor& frame) const;

    // One full time step. h_prev may be undefined for t = 0 (treated as
    // zeros). Returns the HR output and writes the new hidden state.
    Tensor step(const Tensor& frame, const Tensor& h_prev, Tensor& h_out) const;

    // Inference over a whole sequence: flow + warp alignment between steps,
    // outputs clipped to [0,1]. Runs without gradient recording.
    std::vector<Tensor> run_sequence(const std::vector<Tensor>& frames) const;

    ParamMap parameters() const;
    // Replace parameter values in place from a named map (shape-checked).
    void load_parameters(const ParamMap& params);

private:
    ModelConfig cfg_;
    Conv2d shallow_;
    // Fusion alternatives; only the configured one holds parameters.
    Conv2d concat_fuse_;
    SpatialWindowAttention spatial_fuse_;
    Conv2d spatial_fuse_proj_;
    Caf caf_;
    // Encoder/decoder stacks.
    std::vector<std::vector<RecBlock>> enc_blocks_;   // per level
    std::vector<Conv2d> down_;                        // level l -> l+1
    std::vector<Conv2d> up_;                          // 1x1 to 4x next width
    std::vector<Conv2d> skip_merge_;                  // 1x1 after concat
    std::vector<std::vector<RecBlock>> dec_blocks_;   // levels 0..levels-2
    // Upsampler.
    std::vector<Conv2d> up_stages_;                   // conv before shuffle(2)
    Conv2d out_conv_;                                 // zero-init 3-channel
};

// Eval-only clamp of all values to [0,1].
Tensor clamp01(const Tensor& t);

// Plain recurrent baseline cell: concatenation fusion and residual conv
// blocks, written as a straight-line module without the configuration
// switches of Model. Exists so the degenerate Model configuration can be
// checked against an independent construction of the same network.
class BaselineCell {
public:
    BaselineCell(const ModelConfig& cfg, std::uint64_t init_seed);

    Tensor step(const Tensor& frame, const Tensor& h_prev, Tensor& h_out) const;
    ParamMap parameters() const;

private:
    ModelConfig cfg_;
    Conv2d embed_, fuse_;
    std::vector<std::vector<std::pair<Conv2d, Conv2d>>> enc_;
    std::vector<Conv2d> down_;
    std::vector<Conv2d> up_, merge_;
    std::vector<std::vector<std::pair<Conv2d, Conv2d>>> dec_;
    std::vector<Conv2d> stages_;
    Conv2d last_;
};

}  // namespace rvf
