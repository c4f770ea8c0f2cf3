#include "rvf/train.hpp"

#include <cmath>

#include "rvf/common.hpp"
#include "rvf/flow.hpp"

namespace rvf {

Optimizer::Optimizer(const OptimizerConfig& cfg) : cfg_(cfg) {
    if (cfg_.kind != "adam" && cfg_.kind != "sgd") {
        throw ConfigError("optimizer: unknown kind '" + cfg_.kind + "'");
    }
    if (!(cfg_.lr > 0.0)) throw ConfigError("optimizer: lr must be > 0");
}

void Optimizer::step(ParamMap& params) {
    ++t_;
    for (auto& [name, p] : params) {
        if (!p.requires_grad()) continue;
        const std::vector<float>& g = p.grad();
        if (g.size() != p.data().size()) continue;  // never touched this step
        Tensor handle = p;
        std::vector<float>& w = handle.leaf_data();
        if (cfg_.kind == "sgd") {
            std::vector<double>& buf = m_[name];
            if (buf.size() != w.size()) buf.assign(w.size(), 0.0);
            for (std::size_t i = 0; i < w.size(); ++i) {
                buf[i] = cfg_.momentum * buf[i] + g[i];
                w[i] = static_cast<float>(w[i] - cfg_.lr * buf[i]);
            }
        } else {
            std::vector<double>& m = m_[name];
            std::vector<double>& v = v_[name];
            if (m.size() != w.size()) m.assign(w.size(), 0.0);
            if (v.size() != w.size()) v.assign(w.size(), 0.0);
            const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
            const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
            for (std::size_t i = 0; i < w.size(); ++i) {
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * static_cast<double>(g[i]) * g[i];
                const double mh = m[i] / bc1;
                const double vh = v[i] / bc2;
                w[i] = static_cast<float>(w[i] - cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps));
            }
        }
    }
}

void zero_all_grads(ParamMap& params) {
    for (auto& [name, p] : params) p.zero_grad();
}

Tensor charbonnier_loss(const Tensor& pred, const Tensor& target, float eps) {
    Tensor d = sub(pred, target);
    return mean_all(sqrt_t(add_scalar(mul(d, d), eps * eps)));
}

namespace {

// Fixed (non-learned) tensors used by the differentiable similarity term.
Tensor luma_weight() {
    return Tensor::from_data({1, 3, 1, 1}, {0.299f, 0.587f, 0.114f});
}

Tensor gaussian_window() {
    double k[11];
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
        const double t = i - 5.0;
        k[i] = std::exp(-t * t / 4.5);
        sum += k[i];
    }
    std::vector<float> w(121);
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 11; ++x)
            w[static_cast<std::size_t>(y * 11 + x)] =
                static_cast<float>(k[y] / sum * k[x] / sum);
    return Tensor::from_data({1, 1, 11, 11}, std::move(w));
}

}  // namespace

Tensor ssim_penalty(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        throw ShapeError("ssim_penalty: shapes differ, " + shape_str(pred.shape()) +
                         " vs " + shape_str(target.shape()));
    }
    const Tensor none;
    Tensor gx = pred, gy = target;
    if (pred.extent(0) == 3) {
        const Tensor lw = luma_weight();
        gx = conv2d(pred, lw, none);
        gy = conv2d(target, lw, none);
    }
    const Tensor gw = gaussian_window();
    const Tensor mx = conv2d(gx, gw, none);
    const Tensor my = conv2d(gy, gw, none);
    const Tensor mxx = mul(mx, mx);
    const Tensor myy = mul(my, my);
    const Tensor mxy = mul(mx, my);
    const Tensor vx = sub(conv2d(mul(gx, gx), gw, none), mxx);
    const Tensor vy = sub(conv2d(mul(gy, gy), gw, none), myy);
    const Tensor cxy = sub(conv2d(mul(gx, gy), gw, none), mxy);
    const float c1 = 1e-4f, c2 = 9e-4f;
    const Tensor num = mul(add_scalar(mul_scalar(mxy, 2.0f), c1),
                           add_scalar(mul_scalar(cxy, 2.0f), c2));
    const Tensor den = mul(add_scalar(add(mxx, myy), c1),
                           add_scalar(add(vx, vy), c2));
    const Tensor mean_sim = mean_all(mul(num, reciprocal(den)));
    return add_scalar(mul_scalar(mean_sim, -1.0f), 1.0f);
}

Tensor stage1_loss(const Tensor& pred, const Tensor& target, float charb_eps,
                   float ssim_weight) {
    Tensor loss = charbonnier_loss(pred, target, charb_eps);
    if (ssim_weight != 0.0f) {
        loss = add(loss, mul_scalar(ssim_penalty(pred, target), ssim_weight));
    }
    return loss;
}

TrainResult train_stage1(Model& model, const std::vector<TrainSample>& data,
                         const TrainConfig& tc) {
    if (data.empty()) throw TrainError("train: empty dataset");
    for (const TrainSample& s : data) {
        if (s.lr.empty() || s.lr.size() != s.hr.size()) {
            throw TrainError("train: sample needs matching LR/HR frame counts");
        }
        for (std::size_t t = 0; t < s.lr.size(); ++t) {
            if (s.hr[t].extent(1) != model.config().scale * s.lr[t].extent(1) ||
                s.hr[t].extent(2) != model.config().scale * s.lr[t].extent(2)) {
                throw TrainError("train: HR extents must be scale * LR extents");
            }
        }
    }

    ParamMap params = model.parameters();
    Optimizer opt(tc.opt);
    TrainResult result;
    result.loss_trace.reserve(static_cast<std::size_t>(tc.steps));

    for (int step = 0; step < tc.steps; ++step) {
        const TrainSample& sample = data[static_cast<std::size_t>(step) % data.size()];
        zero_all_grads(params);

        Tensor hidden;
        Tensor total;
        for (std::size_t t = 0; t < sample.lr.size(); ++t) {
            Tensor aligned;
            if (hidden.defined()) {
                Tensor flow = estimate_flow(sample.lr[t - 1], sample.lr[t]);
                aligned = bilinear_warp(hidden, flow);
            }
            Tensor sr = model.step(sample.lr[t], aligned, hidden);
            Tensor frame_loss = stage1_loss(sr, sample.hr[t], tc.charb_eps, tc.ssim_weight);
            total = total.defined() ? add(total, frame_loss) : frame_loss;
        }
        Tensor loss = mul_scalar(total, 1.0f / static_cast<float>(sample.lr.size()));
        const double value = loss.item_f64();
        if (!std::isfinite(value)) {
            throw TrainError("train: loss became non-finite at step " +
                             std::to_string(step));
        }
        loss.backward();
        opt.step(params);
        result.loss_trace.push_back(value);
    }

    result.ckpt.config = model.config();
    result.ckpt.step = tc.steps;
    for (const auto& [name, p] : params) {
        result.ckpt.params[name] = Tensor::from_data(p.shape(), p.data());
    }
    return result;
}

}  // namespace rvf
