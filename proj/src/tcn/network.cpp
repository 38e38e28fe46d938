#include <algorithm>
#include <cmath>

#include "dap/error.hpp"
#include "dap/tcn.hpp"

namespace dap::tcn {

namespace {

constexpr double kNormEps = 1e-5;

std::size_t idx3(std::size_t o, std::size_t i, std::size_t k, std::size_t cin, std::size_t ks) {
    return (o * cin + i) * ks + k;
}

// out[o][t] = b[o] + sum_{i,k} w[o][i][k] * x[i][t - (K-1-k)*d]
Matrix causal_conv(const Matrix& x, const ParamTensor& w, const ParamTensor& b, std::size_t ks, std::size_t d) {
    const std::size_t cout = w.shape[0], cin = w.shape[1], len = x.cols;
    Matrix out(cout, len);
    for (std::size_t o = 0; o < cout; ++o) {
        double* y = out.row(o).data();
        std::fill(y, y + len, b.v[o]);
        for (std::size_t i = 0; i < cin; ++i) {
            const double* xi = x.row(i).data();
            for (std::size_t k = 0; k < ks; ++k) {
                const std::size_t shift = (ks - 1 - k) * d;
                if (shift >= len) continue;
                const double wk = w.v[idx3(o, i, k, cin, ks)];
                for (std::size_t t = shift; t < len; ++t) y[t] += wk * xi[t - shift];
            }
        }
    }
    return out;
}

void causal_conv_backward(const Matrix& x, const ParamTensor& w, const Matrix& g, std::size_t ks, std::size_t d,
                          ParamTensor& gw, ParamTensor& gb, Matrix* gx) {
    const std::size_t cout = w.shape[0], cin = w.shape[1], len = x.cols;
    for (std::size_t o = 0; o < cout; ++o) {
        const double* go = g.row(o).data();
        double sb = 0.0;
        for (std::size_t t = 0; t < len; ++t) sb += go[t];
        gb.v[o] += sb;
        for (std::size_t i = 0; i < cin; ++i) {
            const double* xi = x.row(i).data();
            double* gxi = gx ? gx->row(i).data() : nullptr;
            for (std::size_t k = 0; k < ks; ++k) {
                const std::size_t shift = (ks - 1 - k) * d;
                if (shift >= len) continue;
                const std::size_t wi = idx3(o, i, k, cin, ks);
                double acc = 0.0;
                for (std::size_t t = shift; t < len; ++t) acc += go[t] * xi[t - shift];
                gw.v[wi] += acc;
                if (gxi) {
                    const double wk = w.v[wi];
                    for (std::size_t t = shift; t < len; ++t) gxi[t - shift] += wk * go[t];
                }
            }
        }
    }
}

// Normalisation across channels at each time step (causal by construction).
Matrix channel_norm(const Matrix& a, const ParamTensor& scale, const ParamTensor& shift, Matrix& hat,
                    std::vector<double>& inv_std) {
    const std::size_t c = a.rows, len = a.cols;
    Matrix y(c, len);
    hat = Matrix(c, len);
    inv_std.assign(len, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
        double mean = 0.0;
        for (std::size_t r = 0; r < c; ++r) mean += a(r, t);
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t r = 0; r < c; ++r) var += (a(r, t) - mean) * (a(r, t) - mean);
        var /= static_cast<double>(c);
        const double inv = 1.0 / std::sqrt(var + kNormEps);
        inv_std[t] = inv;
        for (std::size_t r = 0; r < c; ++r) {
            const double h = (a(r, t) - mean) * inv;
            hat(r, t) = h;
            y(r, t) = scale.v[r] * h + shift.v[r];
        }
    }
    return y;
}

Matrix channel_norm_backward(const Matrix& gy, const Matrix& hat, const std::vector<double>& inv_std,
                             const ParamTensor& scale, ParamTensor& gscale, ParamTensor& gshift) {
    const std::size_t c = gy.rows, len = gy.cols;
    Matrix ga(c, len);
    const double n = static_cast<double>(c);
    for (std::size_t t = 0; t < len; ++t) {
        double sum_g = 0.0, sum_gh = 0.0;
        for (std::size_t r = 0; r < c; ++r) {
            const double g = gy(r, t);
            gscale.v[r] += g * hat(r, t);
            gshift.v[r] += g;
            const double gh = g * scale.v[r];
            sum_g += gh;
            sum_gh += gh * hat(r, t);
        }
        for (std::size_t r = 0; r < c; ++r) {
            const double gh = gy(r, t) * scale.v[r];
            ga(r, t) = inv_std[t] / n * (n * gh - sum_g - hat(r, t) * sum_gh);
        }
    }
    return ga;
}

Matrix scaled_relu(const Matrix& hat, const ParamTensor& scale, const ParamTensor& shift) {
    Matrix r(hat.rows, hat.cols);
    for (std::size_t c = 0; c < hat.rows; ++c)
        for (std::size_t t = 0; t < hat.cols; ++t) r(c, t) = std::max(0.0, scale.v[c] * hat(c, t) + shift.v[c]);
    return r;
}

}  // namespace

ForwardResult forward(const TcnParams& params, const dsp::HyperPatternWindow& window, Mode mode,
                      std::uint64_t dropout_seed) {
    const auto& cfg = params.config;
    const auto& x = window.channels;
    if (x.rows != static_cast<std::size_t>(cfg.input_channels))
        throw ShapeError("tcn forward: window has " + std::to_string(x.rows) + " channels, network expects " +
                         std::to_string(cfg.input_channels));
    if (x.cols == 0) throw ShapeError("tcn forward: empty window");

    const std::size_t len = x.cols;
    const std::size_t ks = static_cast<std::size_t>(cfg.kernel_size);
    const std::size_t ch = static_cast<std::size_t>(cfg.channels_per_block);
    const bool dropout = mode == Mode::train && cfg.dropout_rate > 0.0;
    Rng rng(dropout_seed);

    ForwardResult res;
    auto& cache = res.cache;
    cache.blocks.resize(params.blocks.size());

    Matrix cur = x;
    if (cfg.strict_causal) {
        Matrix delayed(x.rows, len);
        for (std::size_t r = 0; r < x.rows; ++r)
            for (std::size_t t = 1; t < len; ++t) delayed(r, t) = x(r, t - 1);
        cur = std::move(delayed);
    }

    for (std::size_t b = 0; b < params.blocks.size(); ++b) {
        const auto& p = params.blocks[b];
        auto& bc = cache.blocks[b];
        const std::size_t d = static_cast<std::size_t>(cfg.dilation(static_cast<int>(b)));
        bc.input = std::move(cur);

        bc.mask.assign(ch, 1.0);
        if (dropout) {
            const double keep = 1.0 - cfg.dropout_rate;
            for (auto& m : bc.mask) m = rng.bernoulli(cfg.dropout_rate) ? 0.0 : 1.0 / keep;
        }

        bc.conv1 = causal_conv(bc.input, p.conv1_w, p.conv1_b, ks, d);
        channel_norm(bc.conv1, p.norm1_scale, p.norm1_shift, bc.norm1_hat, bc.inv_std1);
        bc.relu1 = scaled_relu(bc.norm1_hat, p.norm1_scale, p.norm1_shift);
        bc.drop1 = bc.relu1;
        for (std::size_t c = 0; c < ch; ++c)
            for (double& v : bc.drop1.row(c)) v *= bc.mask[c];

        bc.conv2 = causal_conv(bc.drop1, p.conv2_w, p.conv2_b, ks, d);
        channel_norm(bc.conv2, p.norm2_scale, p.norm2_shift, bc.norm2_hat, bc.inv_std2);
        bc.relu2 = scaled_relu(bc.norm2_hat, p.norm2_scale, p.norm2_shift);

        Matrix out(ch, len);
        if (p.proj_w) {
            const std::size_t cin = bc.input.rows;
            for (std::size_t o = 0; o < ch; ++o) {
                double* y = out.row(o).data();
                for (std::size_t i = 0; i < cin; ++i) {
                    const double w = p.proj_w->v[o * cin + i];
                    const double* xi = bc.input.row(i).data();
                    for (std::size_t t = 0; t < len; ++t) y[t] += w * xi[t];
                }
            }
        } else {
            out = bc.input;
        }
        for (std::size_t c = 0; c < ch; ++c) {
            double* y = out.row(c).data();
            const double* r = bc.relu2.row(c).data();
            for (std::size_t t = 0; t < len; ++t) y[t] += r[t] * bc.mask[c];
        }
        bc.output = out;
        cur = std::move(out);
    }

    const std::size_t classes = static_cast<std::size_t>(cfg.num_classes);
    cache.pooled.assign(ch, 0.0);
    for (std::size_t c = 0; c < ch; ++c) {
        double s = 0.0;
        for (double v : cur.row(c)) s += v;
        cache.pooled[c] = s / static_cast<double>(len);
    }
    std::vector<double> logits(classes);
    for (std::size_t k = 0; k < classes; ++k) {
        double z = params.head_b.v[k];
        for (std::size_t c = 0; c < ch; ++c) z += params.head_w.v[k * ch + c] * cache.pooled[c];
        logits[k] = z;
    }
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    cache.probs.resize(classes);
    for (std::size_t k = 0; k < classes; ++k) {
        cache.probs[k] = std::exp(logits[k] - zmax);
        denom += cache.probs[k];
    }
    for (double& pk : cache.probs) pk /= denom;

    res.score.value = std::clamp(cache.probs[static_cast<std::size_t>(dsp::Label::wakeful)], 0.0, 1.0);
    res.score.window_start_ms = window.window_start_ms;
    return res;
}

LossGrad backward(const TcnParams& params, const ForwardCache& cache, dsp::Label label) {
    const auto& cfg = params.config;
    const std::size_t ks = static_cast<std::size_t>(cfg.kernel_size);
    const std::size_t ch = static_cast<std::size_t>(cfg.channels_per_block);
    const std::size_t classes = static_cast<std::size_t>(cfg.num_classes);
    const auto y = static_cast<std::size_t>(label);

    LossGrad out{0.0, params.zeros_like()};
    auto& g = out.grad;
    out.loss = -std::log(std::max(cache.probs[y], 1e-300));

    std::vector<double> dz(classes);
    for (std::size_t k = 0; k < classes; ++k) dz[k] = cache.probs[k] - (k == y ? 1.0 : 0.0);
    std::vector<double> dpool(ch, 0.0);
    for (std::size_t k = 0; k < classes; ++k) {
        g.head_b.v[k] += dz[k];
        for (std::size_t c = 0; c < ch; ++c) {
            g.head_w.v[k * ch + c] += dz[k] * cache.pooled[c];
            dpool[c] += params.head_w.v[k * ch + c] * dz[k];
        }
    }

    const std::size_t len = cache.blocks.back().output.cols;
    Matrix gout(ch, len);
    for (std::size_t c = 0; c < ch; ++c) std::fill_n(gout.row(c).data(), len, dpool[c] / static_cast<double>(len));

    for (std::size_t bi = params.blocks.size(); bi-- > 0;) {
        const auto& p = params.blocks[bi];
        auto& gp = g.blocks[bi];
        const auto& bc = cache.blocks[bi];
        const std::size_t d = static_cast<std::size_t>(cfg.dilation(static_cast<int>(bi)));
        const std::size_t cin = bc.input.rows;

        Matrix gin(cin, len);
        if (p.proj_w) {
            for (std::size_t o = 0; o < ch; ++o) {
                const double* go = gout.row(o).data();
                for (std::size_t i = 0; i < cin; ++i) {
                    const double* xi = bc.input.row(i).data();
                    double acc = 0.0;
                    for (std::size_t t = 0; t < len; ++t) acc += go[t] * xi[t];
                    gp.proj_w->v[o * cin + i] += acc;
                    const double w = p.proj_w->v[o * cin + i];
                    double* gi = gin.row(i).data();
                    for (std::size_t t = 0; t < len; ++t) gi[t] += w * go[t];
                }
            }
        } else {
            gin = gout;
        }

        Matrix gn2(ch, len);
        for (std::size_t c = 0; c < ch; ++c)
            for (std::size_t t = 0; t < len; ++t)
                gn2(c, t) = bc.relu2(c, t) > 0.0 ? gout(c, t) * bc.mask[c] : 0.0;
        const Matrix ga2 =
            channel_norm_backward(gn2, bc.norm2_hat, bc.inv_std2, p.norm2_scale, gp.norm2_scale, gp.norm2_shift);
        Matrix gdrop1(ch, len);
        causal_conv_backward(bc.drop1, p.conv2_w, ga2, ks, d, gp.conv2_w, gp.conv2_b, &gdrop1);

        Matrix gn1(ch, len);
        for (std::size_t c = 0; c < ch; ++c)
            for (std::size_t t = 0; t < len; ++t)
                gn1(c, t) = bc.relu1(c, t) > 0.0 ? gdrop1(c, t) * bc.mask[c] : 0.0;
        const Matrix ga1 =
            channel_norm_backward(gn1, bc.norm1_hat, bc.inv_std1, p.norm1_scale, gp.norm1_scale, gp.norm1_shift);
        causal_conv_backward(bc.input, p.conv1_w, ga1, ks, d, gp.conv1_w, gp.conv1_b, bi > 0 ? &gin : nullptr);

        gout = std::move(gin);
    }
    return out;
}

LossGrad loss_and_grad(const TcnParams& params, const dsp::HyperPatternWindow& window, Mode mode,
                       std::uint64_t dropout_seed) {
    if (!window.label) throw InvalidDataset("loss_and_grad: window has no label");
    const auto fr = forward(params, window, mode, dropout_seed);
    return backward(params, fr.cache, *window.label);
}

AttentionScore predict_score(const TcnParams& params, const dsp::HyperPatternWindow& window) {
    return forward(params, window, Mode::eval).score;
}

}  // namespace dap::tcn
