#include <cmath>

#include "rvf/attention.hpp"

namespace rvf {

void AttentionConfig::validate() const {
    if (heads < 1) throw ConfigError("attention heads must be positive");
    if (dim < 1) throw ConfigError("attention dim must be positive");
    if (squeeze_ratio < 1 || dim % squeeze_ratio != 0)
        throw ConfigError("squeeze ratio " + std::to_string(squeeze_ratio) +
                          " must divide channel count " + std::to_string(dim));
    if (window < 1) throw ConfigError("attention window must be positive");
}

ChannelAttentionOut channel_attention_core(const Tensor& q, const Tensor& k, const Tensor& v,
                                           const Tensor& alpha, int heads) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || k.shape() != v.shape() ||
        q.extent(1) != k.extent(1))
        throw ShapeError("channel attention core: got q " + shape_str(q.shape()) + ", k " +
                         shape_str(k.shape()) + ", v " + shape_str(v.shape()));
    const int c = q.extent(0), ck = k.extent(0);
    if (c % heads != 0 || ck % heads != 0)
        throw ConfigError("heads " + std::to_string(heads) + " must divide channel counts " +
                          std::to_string(c) + " and " + std::to_string(ck));
    const int ch = c / heads, ckh = ck / heads;
    std::vector<Tensor> outs, map_rows;
    for (int h = 0; h < heads; ++h) {
        Tensor qh = heads == 1 ? q : slice(q, 0, h * ch, ch);
        Tensor kh = heads == 1 ? k : slice(k, 0, h * ckh, ckh);
        Tensor vh = heads == 1 ? v : slice(v, 0, h * ckh, ckh);
        Tensor logits = scale_by(matmul(qh, transpose(kh)), reciprocal(slice(alpha, 0, h, 1)));
        Tensor a = softmax(logits, 1);
        outs.push_back(matmul(a, vh));
        if (heads == 1) {
            map_rows.push_back(a);
        } else {
            std::vector<Tensor> row;
            if (h > 0) row.push_back(Tensor::zeros({ch, h * ckh}));
            row.push_back(a);
            if (h + 1 < heads) row.push_back(Tensor::zeros({ch, (heads - 1 - h) * ckh}));
            map_rows.push_back(row.size() == 1 ? row[0] : concat(row, 1));
        }
    }
    ChannelAttentionOut out;
    out.features = heads == 1 ? outs[0] : concat(outs, 0);
    out.map = heads == 1 ? map_rows[0] : concat(map_rows, 0);
    return out;
}

SpatialWindowAttention::SpatialWindowAttention(const AttentionConfig& cfg, SeedStream& rng)
    : cfg_(cfg), ln_x_(cfg.dim), ln_y_(cfg.key_dim) {
    cfg_.validate();
    if (cfg_.proj_dim < 1 || cfg_.proj_dim % cfg_.heads != 0)
        throw ConfigError("spatial attention projection width " + std::to_string(cfg_.proj_dim) +
                          " must be a positive multiple of heads " + std::to_string(cfg_.heads));
    q_proj_ = Conv2d(cfg_.dim, cfg_.proj_dim, 1, rng, false);
    k_proj_ = Conv2d(cfg_.key_dim, cfg_.proj_dim, 1, rng, false);
    v_proj_ = Conv2d(cfg_.key_dim, cfg_.proj_dim, 1, rng, false);
}

SpatialAttentionOut SpatialWindowAttention::forward(const Tensor& x, const Tensor& y) const {
    if (x.rank() != 3 || y.rank() != 3 || x.extent(1) != y.extent(1) ||
        x.extent(2) != y.extent(2))
        throw ShapeError("spatial attention: x " + shape_str(x.shape()) +
                         " and y " + shape_str(y.shape()) + " must share spatial extents");
    const int w = cfg_.window;
    const int h0 = x.extent(1), w0 = x.extent(2);
    const int ph = (w - h0 % w) % w, pw = (w - w0 % w) % w;
    Tensor xi = ph || pw ? pad_reflect2d(x, 0, ph, 0, pw) : x;
    Tensor yi = ph || pw ? pad_reflect2d(y, 0, ph, 0, pw) : y;

    Tensor q = q_proj_.forward(ln_x_.forward(xi));
    Tensor k = k_proj_.forward(ln_y_.forward(yi));
    Tensor v = v_proj_.forward(ln_y_.forward(yi));

    const int hp = q.extent(1), wp = q.extent(2);
    const int dh = cfg_.proj_dim / cfg_.heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
    SpatialAttentionOut result;
    std::vector<Tensor> rows;
    for (int wy = 0; wy < hp / w; ++wy) {
        std::vector<Tensor> cols;
        for (int wx = 0; wx < wp / w; ++wx) {
            Tensor qw = reshape(crop2d(q, wy * w, wx * w, w, w), {cfg_.proj_dim, w * w});
            Tensor kw = reshape(crop2d(k, wy * w, wx * w, w, w), {cfg_.proj_dim, w * w});
            Tensor vw = reshape(crop2d(v, wy * w, wx * w, w, w), {cfg_.proj_dim, w * w});
            std::vector<Tensor> head_outs;
            for (int hd = 0; hd < cfg_.heads; ++hd) {
                Tensor qh = cfg_.heads == 1 ? qw : slice(qw, 0, hd * dh, dh);
                Tensor kh = cfg_.heads == 1 ? kw : slice(kw, 0, hd * dh, dh);
                Tensor vh = cfg_.heads == 1 ? vw : slice(vw, 0, hd * dh, dh);
                Tensor a = softmax(mul_scalar(matmul(transpose(qh), kh), scale), 1);
                result.maps.push_back(a);
                head_outs.push_back(transpose(matmul(a, transpose(vh))));
            }
            Tensor ow = cfg_.heads == 1 ? head_outs[0] : concat(head_outs, 0);
            cols.push_back(reshape(ow, {cfg_.proj_dim, w, w}));
        }
        rows.push_back(cols.size() == 1 ? cols[0] : concat(cols, 2));
    }
    Tensor full = rows.size() == 1 ? rows[0] : concat(rows, 1);
    result.features = (ph || pw) ? crop2d(full, 0, 0, h0, w0) : full;
    return result;
}

void SpatialWindowAttention::collect(const std::string& prefix, ParamMap& out) const {
    ln_x_.collect(prefix + "ln_x.", out);
    ln_y_.collect(prefix + "ln_y.", out);
    q_proj_.collect(prefix + "q_proj.", out);
    k_proj_.collect(prefix + "k_proj.", out);
    v_proj_.collect(prefix + "v_proj.", out);
}

ChannelAttention::ChannelAttention(const AttentionConfig& cfg, SeedStream& rng)
    : cfg_(cfg), ln_x_(cfg.dim), ln_y_(cfg.key_dim) {
    cfg_.validate();
    if (cfg_.key_dim < 1 || cfg_.dim % cfg_.heads != 0 || cfg_.key_dim % cfg_.heads != 0)
        throw ConfigError("channel attention: heads " + std::to_string(cfg_.heads) +
                          " must divide dims " + std::to_string(cfg_.dim) + " and " +
                          std::to_string(cfg_.key_dim));
    q_proj_ = Conv2d(cfg_.dim, cfg_.dim, 1, rng, false);
    k_proj_ = Conv2d(cfg_.key_dim, cfg_.key_dim, 1, rng, false);
    v_proj_ = Conv2d(cfg_.key_dim, cfg_.key_dim, 1, rng, false);
    alpha_ = Tensor::full({cfg_.heads}, 1.0f, true);
}

ChannelAttentionOut ChannelAttention::forward(const Tensor& x, const Tensor& y) const {
    if (x.rank() != 3 || y.rank() != 3 || x.extent(1) != y.extent(1) ||
        x.extent(2) != y.extent(2))
        throw ShapeError("channel attention: x " + shape_str(x.shape()) + " and y " +
                         shape_str(y.shape()) + " must share spatial extents");
    const int h = x.extent(1), w = x.extent(2);
    Tensor q = reshape(q_proj_.forward(ln_x_.forward(x)), {cfg_.dim, h * w});
    Tensor k = reshape(k_proj_.forward(ln_y_.forward(y)), {cfg_.key_dim, h * w});
    Tensor v = reshape(v_proj_.forward(ln_y_.forward(y)), {cfg_.key_dim, h * w});
    ChannelAttentionOut out = channel_attention_core(q, k, v, alpha_, cfg_.heads);
    out.features = reshape(out.features, {cfg_.dim, h, w});
    return out;
}

Tensor ChannelAttention::raw_logits(const Tensor& x, const Tensor& y) const {
    if (x.rank() != 3 || y.rank() != 3 || x.extent(1) != y.extent(1) ||
        x.extent(2) != y.extent(2))
        throw ShapeError("channel attention: x " + shape_str(x.shape()) + " and y " +
                         shape_str(y.shape()) + " must share spatial extents");
    const int h = x.extent(1), w = x.extent(2);
    Tensor q = reshape(q_proj_.forward(ln_x_.forward(x)), {cfg_.dim, h * w});
    Tensor k = reshape(k_proj_.forward(ln_y_.forward(y)), {cfg_.key_dim, h * w});
    const int ch = cfg_.dim / cfg_.heads, ckh = cfg_.key_dim / cfg_.heads;
    std::vector<Tensor> rows;
    for (int hd = 0; hd < cfg_.heads; ++hd) {
        Tensor qh = cfg_.heads == 1 ? q : slice(q, 0, hd * ch, ch);
        Tensor kh = cfg_.heads == 1 ? k : slice(k, 0, hd * ckh, ckh);
        rows.push_back(matmul(qh, transpose(kh)));
    }
    return rows.size() == 1 ? rows[0] : concat(rows, 0);
}

void ChannelAttention::collect(const std::string& prefix, ParamMap& out) const {
    ln_x_.collect(prefix + "ln_x.", out);
    ln_y_.collect(prefix + "ln_y.", out);
    q_proj_.collect(prefix + "q_proj.", out);
    k_proj_.collect(prefix + "k_proj.", out);
    v_proj_.collect(prefix + "v_proj.", out);
    out[prefix + "alpha"] = alpha_;
}

RescaleMlp::RescaleMlp(SeedStream& rng) : l1_(2, 4, rng), l2_(4, 1, rng, true) {}

Tensor RescaleMlp::forward(const Tensor& square_map) const {
    if (square_map.rank() != 2 || square_map.extent(0) != square_map.extent(1))
        throw ShapeError("rescale weights need a square map, got " + shape_str(square_map.shape()));
    const int n = square_map.extent(0);
    Tensor h = relu(l1_.forward(row_mean_max(square_map)));
    return reshape(sigmoid(l2_.forward(h)), {n});
}

void RescaleMlp::collect(const std::string& prefix, ParamMap& out) const {
    l1_.collect(prefix + "l1.", out);
    l2_.collect(prefix + "l2.", out);
}

Ica::Ica(const AttentionConfig& cfg, SeedStream& rng) : cfg_(cfg) {
    cfg_.validate();
    const int cr = cfg_.dim / cfg_.squeeze_ratio;
    if (cr % cfg_.heads != 0)
        throw ConfigError("squeezed width " + std::to_string(cr) + " not divisible by heads " +
                          std::to_string(cfg_.heads));
    squeeze_ = Conv2d(cfg_.dim, cr, 1, rng, false);
    AttentionConfig inner = cfg_;
    inner.dim = cr;
    inner.key_dim = cr;
    inner.squeeze_ratio = 1;  // already squeezed
    attn_ = ChannelAttention(inner, rng);
    rescale_ = RescaleMlp(rng);
    excite_ = Conv2d(cr, cfg_.dim, 1, rng, false);
}

Tensor Ica::forward(const Tensor& x) const {
    Tensor s = squeeze_.forward(x);
    ChannelAttentionOut ca = attn_.forward(s, s);
    Tensor weights = rescale_.forward(ca.map);
    Tensor rescaled = scale_channels(ca.features, weights);
    return add(excite_.forward(rescaled), x);
}

void Ica::collect(const std::string& prefix, ParamMap& out) const {
    squeeze_.collect(prefix + "squeeze.", out);
    attn_.collect(prefix + "attn.", out);
    rescale_.collect(prefix + "rescale.", out);
    excite_.collect(prefix + "excite.", out);
}

Caf::Caf(int channels, SeedStream& rng)
    : channels_(channels), ln_f_(channels), ln_h_(channels) {
    q_conv_ = Conv2d(channels, channels, 3, rng, false);
    kv_point_ = Conv2d(channels, 2 * channels, 1, rng, false);
    kv_dw_ = Conv2d(2 * channels, 2 * channels, 3, rng, false, 1, 2 * channels);
    alpha_ = Tensor::full({1}, 1.0f, true);
    fuse1_ = Conv2d(2 * channels, 2 * channels, 1, rng, true);
    fuse_dw_ = Conv2d(2 * channels, 2 * channels, 3, rng, true, 1, 2 * channels);
    fuse2_ = Conv2d(2 * channels, channels, 1, rng, true);
}

Tensor Caf::forward(const Tensor& f_t, const Tensor& h_prev) const {
    if (f_t.shape() != h_prev.shape())
        throw ShapeError("fusion inputs must match: " + shape_str(f_t.shape()) + " vs " +
                         shape_str(h_prev.shape()));
    const int c = channels_, h = f_t.extent(1), w = f_t.extent(2);
    Tensor q = reshape(q_conv_.forward(ln_f_.forward(f_t)), {c, h * w});
    Tensor kv = kv_dw_.forward(kv_point_.forward(ln_h_.forward(h_prev)));
    Tensor k = reshape(slice(kv, 0, 0, c), {c, h * w});
    Tensor v = reshape(slice(kv, 0, c, c), {c, h * w});
    ChannelAttentionOut att = channel_attention_core(q, k, v, alpha_, 1);
    Tensor fused = concat({reshape(att.features, {c, h, w}), f_t}, 0);
    return fuse2_.forward(fuse_dw_.forward(fuse1_.forward(fused)));
}

void Caf::collect(const std::string& prefix, ParamMap& out) const {
    ln_f_.collect(prefix + "ln_f.", out);
    ln_h_.collect(prefix + "ln_h.", out);
    q_conv_.collect(prefix + "q_conv.", out);
    kv_point_.collect(prefix + "kv_point.", out);
    kv_dw_.collect(prefix + "kv_dw.", out);
    out[prefix + "alpha"] = alpha_;
    fuse1_.collect(prefix + "fuse1.", out);
    fuse_dw_.collect(prefix + "fuse_dw.", out);
    fuse2_.collect(prefix + "fuse2.", out);
}

Gdfn::Gdfn(int channels, SeedStream& rng, float expansion) : ln_(channels) {
    const int hidden = 2 * static_cast<int>(expansion * channels);
    expand_ = Conv2d(channels, hidden, 1, rng, false);
    dw_ = Conv2d(hidden, hidden, 3, rng, false, 1, hidden);
    proj_ = Conv2d(hidden / 2, channels, 1, rng, false);
}

Tensor Gdfn::forward(const Tensor& x) const {
    Tensor hmix = dw_.forward(expand_.forward(ln_.forward(x)));
    const int half = hmix.extent(0) / 2;
    Tensor gate = slice(hmix, 0, 0, half);
    Tensor value = slice(hmix, 0, half, half);
    return add(x, proj_.forward(mul(gelu(gate), value)));
}

void Gdfn::collect(const std::string& prefix, ParamMap& out) const {
    ln_.collect(prefix + "ln.", out);
    expand_.collect(prefix + "expand.", out);
    dw_.collect(prefix + "dw.", out);
    proj_.collect(prefix + "proj.", out);
}

}  // namespace rvf
