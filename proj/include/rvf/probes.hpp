#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rvf/attention.hpp"
#include "rvf/degrade.hpp"
#include "rvf/nn.hpp"

namespace rvf {

// Small fixed feature extractor used by the probes so attention operates on
// realistic multi-channel features rather than raw pixels: a center-surround
// high-pass (frame minus its blur), then two seeded 3x3 convolutions with
// rectifiers, 3 -> width channels.
class ToyEncoder {
public:
    explicit ToyEncoder(std::uint64_t seed, int width = 16);

    Tensor forward(const Tensor& frame) const;
    int width() const { return width_; }

private:
    int width_ = 0;
    Conv2d c1_, c2_;
};

// Query-degradation sensitivity of one attention form: embeds the current
// frame twice (clean and degraded query), attends both against the previous
// frame's embedding as key/value, and returns the cosine similarity of the
// two outputs. 1 means the output ignored the query corruption entirely.
// kind is "spatial" or "channel". Same-size degradations only.
double attention_sensitivity(const std::string& kind, const ToyEncoder& enc,
                             const Tensor& curr, const Tensor& prev,
                             const DegradationSpec& spec, std::uint64_t attn_seed);

// One row of the sensitivity comparison: a degradation and the mean
// similarity for each attention form over the supplied frame pairs.
struct SensitivityRow {
    std::string degradation;
    double s_spatial = 0.0;
    double s_channel = 0.0;
};

// Runs the full comparison over (prev, curr) frame pairs for the standard
// probe degradations: blur sigma 2, noise sigma 0.05, compression quality 30.
std::vector<SensitivityRow> sensitivity_table(
    const std::vector<std::pair<Tensor, Tensor>>& frame_pairs, std::uint64_t seed);

// Covariance comparison: feeds each input through seeded channel and spatial
// self-attention and reports the mean absolute off-diagonal covariance of the
// input batch and of both output batches.
struct CovarianceProbe {
    double input_ac = 0.0;
    double channel_ac = 0.0;
    double spatial_ac = 0.0;
};

CovarianceProbe covariance_probe(const std::vector<Tensor>& inputs,
                                 std::uint64_t attn_seed);

}  // namespace rvf
