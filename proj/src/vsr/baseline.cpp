#include <algorithm>

#include "rvf/common.hpp"
#include "rvf/degrade.hpp"
#include "rvf/model.hpp"

namespace rvf {

// Every layer is spelled out here on purpose; keep this file free of the
// block/fusion dispatch used by Model.

BaselineCell::BaselineCell(const ModelConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg) {
    cfg_.validate();
    SeedStream rng(derive_seed(init_seed, "baseline"));
    const std::vector<int>& ch = cfg_.channels_per_level;
    const int c0 = ch[0];

    embed_ = Conv2d(3, c0, 3, rng);
    fuse_ = Conv2d(2 * c0, c0, 1, rng);
    enc_.resize(static_cast<std::size_t>(cfg_.levels));
    for (int l = 0; l < cfg_.levels; ++l) {
        const int c = ch[static_cast<std::size_t>(l)];
        for (int b = 0; b < cfg_.blocks_per_level[static_cast<std::size_t>(l)]; ++b) {
            enc_[static_cast<std::size_t>(l)].emplace_back(Conv2d(c, c, 3, rng),
                                                           Conv2d(c, c, 3, rng));
        }
        if (l + 1 < cfg_.levels) {
            down_.emplace_back(c, ch[static_cast<std::size_t>(l + 1)], 3, rng, true, 2);
        }
    }
    dec_.resize(static_cast<std::size_t>(std::max(0, cfg_.levels - 1)));
    up_.resize(dec_.size());
    merge_.resize(dec_.size());
    for (int l = cfg_.levels - 2; l >= 0; --l) {
        const int c = ch[static_cast<std::size_t>(l)];
        up_[static_cast<std::size_t>(l)] =
            Conv2d(ch[static_cast<std::size_t>(l + 1)], 4 * c, 1, rng);
        merge_[static_cast<std::size_t>(l)] = Conv2d(2 * c, c, 1, rng);
        for (int b = 0; b < cfg_.blocks_per_level[static_cast<std::size_t>(l)]; ++b) {
            dec_[static_cast<std::size_t>(l)].emplace_back(Conv2d(c, c, 3, rng),
                                                           Conv2d(c, c, 3, rng));
        }
    }
    for (int s = 0; s < (cfg_.scale == 4 ? 2 : 1); ++s) {
        stages_.emplace_back(c0, 4 * c0, 3, rng);
    }
    last_ = Conv2d(c0, 3, 3, rng);
    Tensor w = last_.weight();
    std::fill(w.leaf_data().begin(), w.leaf_data().end(), 0.0f);
    Tensor b = last_.bias();
    std::fill(b.leaf_data().begin(), b.leaf_data().end(), 0.0f);
}

Tensor BaselineCell::step(const Tensor& frame, const Tensor& h_prev, Tensor& h_out) const {
    Tensor f = embed_.forward(frame);
    Tensor hw = h_prev.defined() ? h_prev : Tensor::zeros(f.shape());
    Tensor x = fuse_.forward(concat({f, hw}, 0));

    std::vector<Tensor> skips;
    for (int l = 0; l < cfg_.levels; ++l) {
        for (const auto& [c1, c2] : enc_[static_cast<std::size_t>(l)]) {
            x = add(x, c2.forward(relu(c1.forward(x))));
        }
        if (l + 1 < cfg_.levels) {
            skips.push_back(x);
            x = down_[static_cast<std::size_t>(l)].forward(x);
        }
    }
    for (int l = cfg_.levels - 2; l >= 0; --l) {
        x = pixel_shuffle(up_[static_cast<std::size_t>(l)].forward(x), 2);
        x = merge_[static_cast<std::size_t>(l)].forward(
            concat({x, skips[static_cast<std::size_t>(l)]}, 0));
        for (const auto& [c1, c2] : dec_[static_cast<std::size_t>(l)]) {
            x = add(x, c2.forward(relu(c1.forward(x))));
        }
    }
    h_out = x;
    for (const Conv2d& stage : stages_) {
        x = pixel_shuffle(stage.forward(x), 2);
    }
    x = last_.forward(x);
    return add(x, resize_bicubic(frame, static_cast<double>(cfg_.scale)));
}

ParamMap BaselineCell::parameters() const {
    ParamMap out;
    embed_.collect("embed.", out);
    fuse_.collect("fuse.", out);
    for (std::size_t l = 0; l < enc_.size(); ++l) {
        for (std::size_t b = 0; b < enc_[l].size(); ++b) {
            const std::string p = "enc" + std::to_string(l) + ".b" + std::to_string(b) + ".";
            enc_[l][b].first.collect(p + "c1.", out);
            enc_[l][b].second.collect(p + "c2.", out);
        }
    }
    for (std::size_t l = 0; l < down_.size(); ++l) {
        down_[l].collect("down" + std::to_string(l) + ".", out);
    }
    for (std::size_t l = 0; l < dec_.size(); ++l) {
        up_[l].collect("up" + std::to_string(l) + ".", out);
        merge_[l].collect("merge" + std::to_string(l) + ".", out);
        for (std::size_t b = 0; b < dec_[l].size(); ++b) {
            const std::string p = "dec" + std::to_string(l) + ".b" + std::to_string(b) + ".";
            dec_[l][b].first.collect(p + "c1.", out);
            dec_[l][b].second.collect(p + "c2.", out);
        }
    }
    for (std::size_t s = 0; s < stages_.size(); ++s) {
        stages_[s].collect("stage" + std::to_string(s) + ".", out);
    }
    last_.collect("last.", out);
    return out;
}

}  // namespace rvf
