#pragma once

#include <map>
#include <string>

#include "rvf/ops.hpp"
#include "rvf/prng.hpp"

namespace rvf {

// Named parameter registry. std::map keeps iteration order stable so
// serialization, optimizer sweeps, and digests are deterministic.
using ParamMap = std::map<std::string, Tensor>;

// Kaiming-uniform initialized tensor: U(-b, b) with b = sqrt(6 / fan_in).
Tensor kaiming_uniform(const Shape& s, int fan_in, SeedStream& rng);

class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_ch, int out_ch, int kernel, SeedStream& rng, bool with_bias = true,
           int stride = 1, int groups = 1);

    Tensor forward(const Tensor& x) const { return conv2d(x, weight_, bias_, stride_, groups_); }
    void collect(const std::string& prefix, ParamMap& out) const;

    const Tensor& weight() const { return weight_; }
    const Tensor& bias() const { return bias_; }

private:
    Tensor weight_;
    Tensor bias_;  // undefined when bias-free
    int stride_ = 1;
    int groups_ = 1;
};

class LayerNorm2d {
public:
    LayerNorm2d() = default;
    explicit LayerNorm2d(int channels);

    Tensor forward(const Tensor& x) const { return layer_norm(x, gamma_, beta_); }
    void collect(const std::string& prefix, ParamMap& out) const;

private:
    Tensor gamma_;
    Tensor beta_;
};

class Linear {
public:
    Linear() = default;
    // zero_init starts both weight and bias at zero (used where the layer
    // must begin as a neutral map).
    Linear(int in_features, int out_features, SeedStream& rng, bool zero_init = false);

    // x[N x in] -> [N x out]
    Tensor forward(const Tensor& x) const { return add_rowvec(matmul(x, wt_), bias_); }
    void collect(const std::string& prefix, ParamMap& out) const;

private:
    Tensor wt_;    // stored pre-transposed: [in x out]
    Tensor bias_;  // [out]
};

}  // namespace rvf
