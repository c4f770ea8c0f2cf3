#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rvf/checkpoint.hpp"
#include "rvf/model.hpp"

namespace rvf {

struct OptimizerConfig {
    std::string kind = "adam";  // "adam" | "sgd"
    double lr = 1e-3;
    double momentum = 0.9;  // sgd only
    double beta1 = 0.9;     // adam
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First-order updates over a named parameter set. State (momentum / moment
// estimates) is kept per name in double precision.
class Optimizer {
public:
    Optimizer() = default;
    explicit Optimizer(const OptimizerConfig& cfg);

    // Applies one update from the accumulated gradients. Parameters whose
    // gradient buffer is absent are left untouched.
    void step(ParamMap& params);

private:
    OptimizerConfig cfg_;
    std::int64_t t_ = 0;
    std::map<std::string, std::vector<double>> m_, v_;
};

void zero_all_grads(ParamMap& params);

// Differentiable losses (recorded on the tape).
Tensor charbonnier_loss(const Tensor& pred, const Tensor& target, float eps = 1e-3f);
// 1 - mean windowed structural similarity, built from fixed-weight
// convolutions so it backpropagates. Windows are replicate-padded (the
// evaluation metric uses interior windows only; this term is a training
// signal, not the reported metric).
Tensor ssim_penalty(const Tensor& pred, const Tensor& target);
// charbonnier + weight * ssim_penalty
Tensor stage1_loss(const Tensor& pred, const Tensor& target, float charb_eps,
                   float ssim_weight);

// One training pair: degraded LR frames and the clean HR frames.
struct TrainSample {
    std::vector<Tensor> lr, hr;
};

struct TrainConfig {
    OptimizerConfig opt;
    int steps = 500;
    float charb_eps = 1e-3f;
    float ssim_weight = 0.001f;
    std::uint64_t seed = 0;
};

struct TrainResult {
    Checkpoint ckpt;
    std::vector<double> loss_trace;  // one entry per step
};

// Recurrent training: each step unrolls one sample's sequence with flow-warp
// alignment between frames, averages the per-frame loss, backpropagates
// through the whole unroll, and applies one optimizer update. A non-finite
// loss aborts with the offending step in the message.
TrainResult train_stage1(Model& model, const std::vector<TrainSample>& data,
                         const TrainConfig& tc);

}  // namespace rvf
