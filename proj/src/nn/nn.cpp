#include <cmath>

#include "rvf/nn.hpp"

namespace rvf {

Tensor kaiming_uniform(const Shape& s, int fan_in, SeedStream& rng) {
    if (fan_in <= 0) throw ParamError("kaiming_uniform: fan_in must be positive");
    const double b = std::sqrt(6.0 / fan_in);
    std::vector<float> v(static_cast<std::size_t>(numel_of(s)));
    for (auto& x : v) x = static_cast<float>(rng.uniform(-b, b));
    return Tensor::from_data(s, std::move(v), true);
}

Conv2d::Conv2d(int in_ch, int out_ch, int kernel, SeedStream& rng, bool with_bias, int stride,
               int groups)
    : stride_(stride), groups_(groups) {
    if (in_ch % groups != 0 || out_ch % groups != 0)
        throw ConfigError("conv groups " + std::to_string(groups) + " must divide channels " +
                          std::to_string(in_ch) + "/" + std::to_string(out_ch));
    const int cg = in_ch / groups;
    weight_ = kaiming_uniform({out_ch, cg, kernel, kernel}, cg * kernel * kernel, rng);
    if (with_bias) bias_ = Tensor::zeros({out_ch}, true);
}

void Conv2d::collect(const std::string& prefix, ParamMap& out) const {
    out[prefix + "weight"] = weight_;
    if (bias_.defined()) out[prefix + "bias"] = bias_;
}

LayerNorm2d::LayerNorm2d(int channels)
    : gamma_(Tensor::full({channels}, 1.0f, true)), beta_(Tensor::zeros({channels}, true)) {}

void LayerNorm2d::collect(const std::string& prefix, ParamMap& out) const {
    out[prefix + "gamma"] = gamma_;
    out[prefix + "beta"] = beta_;
}

Linear::Linear(int in_features, int out_features, SeedStream& rng, bool zero_init) {
    if (zero_init) {
        wt_ = Tensor::zeros({in_features, out_features}, true);
    } else {
        wt_ = kaiming_uniform({in_features, out_features}, in_features, rng);
    }
    bias_ = Tensor::zeros({out_features}, true);
}

void Linear::collect(const std::string& prefix, ParamMap& out) const {
    out[prefix + "weight"] = wt_;
    out[prefix + "bias"] = bias_;
}

}  // namespace rvf
