#include <algorithm>
#include <cmath>

#include "dap/error.hpp"
#include "dap/ssfcn.hpp"
#include "ops.hpp"

namespace dap::ssfcn {

using ops::Kernel;
using ops::Vol;

namespace {

constexpr Kernel kConv3d{3, 3, 3};
constexpr Kernel kSpatial{1, 3, 3};
constexpr Kernel kTemporal{3, 1, 1};
constexpr Kernel kPoint{1, 1, 1};

struct UnitCache {
    Vol input, mid;  // mid: output of the spatial factor (separable only)
};

Vol unit_forward(const ConvUnit& u, const Vol& x, bool separable, UnitCache& cache) {
    cache.input = x;
    if (!separable) return ops::conv_forward(x, u.w, ParamTensor{}, kConv3d);
    cache.mid = ops::conv_forward(x, u.w, ParamTensor{}, kSpatial);
    return ops::conv_forward(cache.mid, *u.tw, ParamTensor{}, kTemporal);
}

void unit_backward(const ConvUnit& u, const Vol& dy, bool separable, const UnitCache& cache, ConvUnit& g, Vol* dx) {
    if (!separable) {
        ops::conv_backward(cache.input, u.w, dy, kConv3d, dx, &g.w, nullptr);
        return;
    }
    Vol dmid;
    ops::conv_backward(cache.mid, *u.tw, dy, kTemporal, &dmid, &*g.tw, nullptr);
    ops::conv_backward(cache.input, u.w, dmid, kSpatial, dx, &g.w, nullptr);
}

struct EncoderCache {
    UnitCache u1, u2;
    ops::NormCache n1, n2;
    Vol r1, r2;
    std::vector<std::size_t> pool_arg;
};

struct DecoderCache {
    Vol up;
    ops::NormCache n;
    Vol r;
};

struct Cache {
    std::vector<EncoderCache> enc;
    Vol bottleneck_in;  // encoder output before the temporal bridge
    std::vector<std::size_t> bridge_arg;
    std::vector<DecoderCache> dec;
    Vol features;  // decoder output (head input)
    Vol logits;
};

Vol to_vol(const VideoClip& clip) {
    Vol x(clip.C, clip.T, clip.H, clip.W);
    for (std::size_t t = 0; t < clip.T; ++t)
        for (std::size_t h = 0; h < clip.H; ++h)
            for (std::size_t w = 0; w < clip.W; ++w)
                for (std::size_t c = 0; c < clip.C; ++c)
                    x.v[((c * clip.T + t) * clip.H + h) * clip.W + w] = clip.at(t, h, w, c);
    return x;
}

void check_clip(const SsfcnConfig& cfg, const VideoClip& clip) {
    clip.validate();
    if (clip.T != cfg.clip_len)
        throw ShapeError("clip length " + std::to_string(clip.T) + " != configured " + std::to_string(cfg.clip_len));
    if (clip.C != cfg.input_channels)
        throw ShapeError("clip has " + std::to_string(clip.C) + " channels, network expects " +
                         std::to_string(cfg.input_channels));
    const std::size_t d = cfg.spatial_divisor();
    if (clip.H % d || clip.W % d || clip.H == 0 || clip.W == 0)
        throw ShapeError("clip spatial size " + std::to_string(clip.H) + "x" + std::to_string(clip.W) +
                         " not divisible by " + std::to_string(d));
}

Vol forward_impl(const SsfcnParams& p, const VideoClip& clip, Cache& cache) {
    const auto& cfg = p.config;
    check_clip(cfg, clip);
    Vol x = to_vol(clip);
    cache.enc.resize(p.encoder.size());
    for (std::size_t i = 0; i < p.encoder.size(); ++i) {
        const auto& bp = p.encoder[i];
        auto& c = cache.enc[i];
        c.r1 = ops::norm_forward(unit_forward(bp.conv1, x, cfg.separable, c.u1), bp.norm1.scale, bp.norm1.shift, c.n1);
        ops::relu_inplace(c.r1);
        c.r2 = ops::norm_forward(unit_forward(bp.conv2, c.r1, cfg.separable, c.u2), bp.norm2.scale, bp.norm2.shift,
                                 c.n2);
        ops::relu_inplace(c.r2);
        x = ops::maxpool_hw(c.r2, c.pool_arg);
    }
    cache.bottleneck_in = x;
    x = cfg.bridge == Bridge::mean ? ops::temporal_mean(x) : ops::temporal_max(x, cache.bridge_arg);
    cache.dec.resize(p.decoder.size());
    for (std::size_t j = 0; j < p.decoder.size(); ++j) {
        const auto& bp = p.decoder[j];
        auto& c = cache.dec[j];
        c.up = ops::upsample2(x);
        c.r = ops::norm_forward(ops::conv_forward(c.up, bp.conv_w, ParamTensor{}, kSpatial), bp.norm.scale, bp.norm.shift,
                                c.n);
        ops::relu_inplace(c.r);
        x = c.r;
        if (bp.proj_w)
            ops::add_inplace(x, ops::conv_forward(c.up, *bp.proj_w, ParamTensor{}, kPoint));
        else
            ops::add_inplace(x, c.up);
    }
    cache.features = x;
    cache.logits = ops::conv_forward(x, p.head_w, p.head_b, kPoint);
    return cache.logits;
}

void backward_impl(const SsfcnParams& p, const Cache& cache, const Vol& dlogits, SsfcnParams& g) {
    const auto& cfg = p.config;
    Vol dx;
    ops::conv_backward(cache.features, p.head_w, dlogits, kPoint, &dx, &g.head_w, &g.head_b);
    for (std::size_t jj = p.decoder.size(); jj-- > 0;) {
        const auto& bp = p.decoder[jj];
        auto& gb = g.decoder[jj];
        const auto& c = cache.dec[jj];
        Vol dup;
        if (bp.proj_w)
            ops::conv_backward(c.up, *bp.proj_w, dx, kPoint, &dup, &*gb.proj_w, nullptr);
        else
            dup = dx;
        Vol dr = dx;
        ops::relu_backward_inplace(dr, c.r);
        const Vol da = ops::norm_backward(dr, c.n, bp.norm.scale, gb.norm.scale, gb.norm.shift);
        Vol dconv_in;
        ops::conv_backward(c.up, bp.conv_w, da, kSpatial, &dconv_in, &gb.conv_w, nullptr);
        ops::add_inplace(dup, dconv_in);
        dx = ops::upsample2_backward(dup);
    }
    const std::size_t T = cache.bottleneck_in.T;
    dx = cfg.bridge == Bridge::mean ? ops::temporal_mean_backward(dx, T)
                                    : ops::temporal_max_backward(dx, cache.bridge_arg, T);
    for (std::size_t ii = p.encoder.size(); ii-- > 0;) {
        const auto& bp = p.encoder[ii];
        auto& gb = g.encoder[ii];
        const auto& c = cache.enc[ii];
        Vol d = ops::maxpool_hw_backward(dx, c.pool_arg, c.r2);
        ops::relu_backward_inplace(d, c.r2);
        d = ops::norm_backward(d, c.n2, bp.norm2.scale, gb.norm2.scale, gb.norm2.shift);
        Vol d1;
        unit_backward(bp.conv2, d, cfg.separable, c.u2, gb.conv2, &d1);
        ops::relu_backward_inplace(d1, c.r1);
        d1 = ops::norm_backward(d1, c.n1, bp.norm1.scale, gb.norm1.scale, gb.norm1.shift);
        // The input gradient of the first block is never needed.
        unit_backward(bp.conv1, d1, cfg.separable, c.u1, gb.conv1, ii == 0 ? nullptr : &dx);
    }
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::int64_t last_frame_ms(const VideoClip& clip) {
    return clip.clip_start_ms +
           static_cast<std::int64_t>(std::llround(static_cast<double>(clip.T - 1) * 1000.0 / clip.frame_rate_fps));
}

Matrix to_matrix(const Vol& logits) {
    Matrix m(logits.H, logits.W);
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = sigmoid(logits.v[i]);
    return m;
}

}  // namespace

std::string to_string(Bridge b) { return b == Bridge::mean ? "mean" : "max"; }

Bridge parse_bridge(const std::string& s) {
    if (s == "mean") return Bridge::mean;
    if (s == "max") return Bridge::max;
    throw InvalidSpec("unknown bridge '" + s + "' (expected mean|max)");
}

void VideoClip::validate() const {
    if (T < 1) throw ShapeError("clip must have at least one frame");
    if (C != 1 && C != 3) throw ShapeError("clip channel count must be 1 or 3");
    if (frames.size() != T * H * W * C) throw ShapeError("clip buffer size does not match T*H*W*C");
    if (!(frame_rate_fps > 0.0) || !std::isfinite(frame_rate_fps)) throw InvalidArgument("frame rate must be positive");
    for (double v : frames)
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("clip values must lie in [0,1]");
}

saliency::SaliencyMap ssfcn_forward(const SsfcnParams& params, const VideoClip& clip) {
    Cache cache;
    const Vol logits = forward_impl(params, clip, cache);
    return {to_matrix(logits), last_frame_ms(clip)};
}

FeatureVolume ssfcn_encode(const SsfcnParams& params, const VideoClip& clip) {
    Cache cache;
    forward_impl(params, clip, cache);
    const Vol& b = cache.bottleneck_in;
    return {b.C, b.T, b.H, b.W, b.v};
}

SsfcnLossGrad ssfcn_loss_and_grad(const SsfcnParams& params, const VideoClip& clip, const Matrix& target) {
    if (target.rows != clip.H || target.cols != clip.W) throw ShapeError("target shape does not match clip");
    for (double v : target.data)
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("target values must lie in [0,1]");
    Cache cache;
    const Vol logits = forward_impl(params, clip, cache);
    const double n = static_cast<double>(logits.v.size());
    Vol dlogits(1, 1, logits.H, logits.W);
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.v.size(); ++i) {
        const double z = logits.v[i], y = target.data[i];
        // Stable BCE-with-logits: max(z,0) − z·y + log(1 + e^{−|z|}).
        loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
        dlogits.v[i] = (sigmoid(z) - y) / n;
    }
    SsfcnLossGrad out{loss / n, params.zeros_like(), to_matrix(logits)};
    backward_impl(params, cache, dlogits, out.grad);
    return out;
}

double bce(const Matrix& pred, const Matrix& target) {
    if (pred.rows != target.rows || pred.cols != target.cols) throw ShapeError("bce: shape mismatch");
    if (pred.data.empty()) throw ShapeError("bce: empty maps");
    constexpr double kFloor = 1e-300;
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double p = pred.data[i], y = target.data[i];
        if (y > 0.0) acc -= y * std::log(std::max(p, kFloor));
        if (y < 1.0) acc -= (1.0 - y) * std::log(std::max(1.0 - p, kFloor));
    }
    return acc / static_cast<double>(pred.data.size());
}

double ssfcn_train_step(SsfcnParams& params, const VideoClip& clip, const Matrix& target) {
    auto lg = ssfcn_loss_and_grad(params, clip, target);
    const auto gp = std::as_const(lg.grad).tensors();
    sgd_step(params.tensors(), gp, params.config.learning_rate);
    return lg.loss;
}

SsfcnTrainer::SsfcnTrainer(SsfcnParams params) : params_(std::move(params)) { params_.config.validate(); }

double SsfcnTrainer::step(const VideoClip& clip, const Matrix& target) {
    if (params_.config.optimizer == SsfcnOptimizer::sgd) return ssfcn_train_step(params_, clip, target);
    auto lg = ssfcn_loss_and_grad(params_, clip, target);
    const auto gp = std::as_const(lg.grad).tensors();
    adam_.step(params_.tensors(), gp, params_.config.learning_rate);
    return lg.loss;
}

}  // namespace dap::ssfcn
