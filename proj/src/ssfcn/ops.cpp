#include "ops.hpp"

#include <Eigen/Core>
#include <cmath>

#include "dap/error.hpp"

namespace dap::ssfcn::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using CMapRM = Eigen::Map<const RowMat>;

constexpr double kNormEps = 1e-5;

// Row k = (ci, dt, dh, dw) of the K × N patch matrix, N = T·H·W.
std::vector<double> im2col(const Vol& x, Kernel k) {
    const std::size_t N = x.plane(), pt = k.kt / 2, ph = k.kh / 2, pw = k.kw / 2;
    std::vector<double> cols(x.C * k.taps() * N, 0.0);
    double* row = cols.data();
    for (std::size_t ci = 0; ci < x.C; ++ci)
        for (std::size_t dt = 0; dt < k.kt; ++dt)
            for (std::size_t dh = 0; dh < k.kh; ++dh)
                for (std::size_t dw = 0; dw < k.kw; ++dw, row += N)
                    for (std::size_t t = 0; t < x.T; ++t) {
                        const std::ptrdiff_t ts = static_cast<std::ptrdiff_t>(t + dt) - static_cast<std::ptrdiff_t>(pt);
                        if (ts < 0 || ts >= static_cast<std::ptrdiff_t>(x.T)) continue;
                        for (std::size_t h = 0; h < x.H; ++h) {
                            const std::ptrdiff_t hs =
                                static_cast<std::ptrdiff_t>(h + dh) - static_cast<std::ptrdiff_t>(ph);
                            if (hs < 0 || hs >= static_cast<std::ptrdiff_t>(x.H)) continue;
                            const double* src = &x.v[((ci * x.T + ts) * x.H + hs) * x.W];
                            double* dst = row + (t * x.H + h) * x.W;
                            const std::size_t w0 = dw < pw ? pw - dw : 0;
                            const std::size_t w1 = x.W + pw - dw < x.W ? x.W + pw - dw : x.W;
                            for (std::size_t w = w0; w < w1; ++w) dst[w] = src[w + dw - pw];
                        }
                    }
    return cols;
}

void col2im_add(const std::vector<double>& cols, Kernel k, Vol& dx) {
    const std::size_t N = dx.plane(), pt = k.kt / 2, ph = k.kh / 2, pw = k.kw / 2;
    const double* row = cols.data();
    for (std::size_t ci = 0; ci < dx.C; ++ci)
        for (std::size_t dt = 0; dt < k.kt; ++dt)
            for (std::size_t dh = 0; dh < k.kh; ++dh)
                for (std::size_t dw = 0; dw < k.kw; ++dw, row += N)
                    for (std::size_t t = 0; t < dx.T; ++t) {
                        const std::ptrdiff_t ts = static_cast<std::ptrdiff_t>(t + dt) - static_cast<std::ptrdiff_t>(pt);
                        if (ts < 0 || ts >= static_cast<std::ptrdiff_t>(dx.T)) continue;
                        for (std::size_t h = 0; h < dx.H; ++h) {
                            const std::ptrdiff_t hs =
                                static_cast<std::ptrdiff_t>(h + dh) - static_cast<std::ptrdiff_t>(ph);
                            if (hs < 0 || hs >= static_cast<std::ptrdiff_t>(dx.H)) continue;
                            double* dst = &dx.v[((ci * dx.T + ts) * dx.H + hs) * dx.W];
                            const double* src = row + (t * dx.H + h) * dx.W;
                            const std::size_t w0 = dw < pw ? pw - dw : 0;
                            const std::size_t w1 = dx.W + pw - dw < dx.W ? dx.W + pw - dw : dx.W;
                            for (std::size_t w = w0; w < w1; ++w) dst[w + dw - pw] += src[w];
                        }
                    }
}

bool is_pointwise(Kernel k) { return k.kt == 1 && k.kh == 1 && k.kw == 1; }

}  // namespace

Vol conv_forward(const Vol& x, const ParamTensor& w, const ParamTensor& b, Kernel k) {
    const std::size_t K = x.C * k.taps(), N = x.plane();
    if (w.shape.size() != 2 || w.shape[1] != K) throw ShapeError("conv: weight shape does not match input channels");
    const std::size_t cout = w.shape[0];
    Vol y(cout, x.T, x.H, x.W);
    MapRM Y(y.v.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(N));
    const CMapRM Wm(w.v.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(K));
    if (is_pointwise(k)) {
        Y.noalias() = Wm * CMapRM(x.v.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(N));
    } else {
        const auto cols = im2col(x, k);
        Y.noalias() = Wm * CMapRM(cols.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(N));
    }
    if (!b.v.empty())
        for (std::size_t c = 0; c < cout; ++c) Y.row(static_cast<Eigen::Index>(c)).array() += b.v[c];
    return y;
}

void conv_backward(const Vol& x, const ParamTensor& w, const Vol& dy, Kernel k, Vol* dx, ParamTensor* dw,
                   ParamTensor* db) {
    const std::size_t K = x.C * k.taps(), N = x.plane(), cout = w.shape[0];
    const CMapRM dY(dy.v.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(N));
    const bool pw = is_pointwise(k);
    std::vector<double> cols;
    if (dw && !pw) cols = im2col(x, k);
    const double* colp = pw ? x.v.data() : cols.data();
    if (dw) {
        MapRM dW(dw->v.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(K));
        dW.noalias() += dY * CMapRM(colp, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(N)).transpose();
    }
    if (db)
        for (std::size_t c = 0; c < cout; ++c) {
            double s = 0.0;
            const double* r = &dy.v[c * N];
            for (std::size_t n = 0; n < N; ++n) s += r[n];
            db->v[c] += s;
        }
    if (dx) {
        *dx = Vol(x.C, x.T, x.H, x.W);
        const CMapRM Wm(w.v.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(K));
        if (pw) {
            MapRM dX(dx->v.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(N));
            dX.noalias() = Wm.transpose() * dY;
        } else {
            std::vector<double> dcols(K * N);
            MapRM dC(dcols.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(N));
            dC.noalias() = Wm.transpose() * dY;
            col2im_add(dcols, k, *dx);
        }
    }
}

Vol norm_forward(const Vol& x, const ParamTensor& scale, const ParamTensor& shift, NormCache& cache) {
    const std::size_t N = x.plane();
    Vol y(x.C, x.T, x.H, x.W);
    cache.xhat = Vol(x.C, x.T, x.H, x.W);
    cache.inv_std.assign(x.C, 0.0);
    for (std::size_t c = 0; c < x.C; ++c) {
        const double* in = &x.v[c * N];
        double mean = 0.0;
        for (std::size_t n = 0; n < N; ++n) mean += in[n];
        mean /= static_cast<double>(N);
        double var = 0.0;
        for (std::size_t n = 0; n < N; ++n) var += (in[n] - mean) * (in[n] - mean);
        var /= static_cast<double>(N);
        const double inv = 1.0 / std::sqrt(var + kNormEps);
        cache.inv_std[c] = inv;
        double* xh = &cache.xhat.v[c * N];
        double* out = &y.v[c * N];
        for (std::size_t n = 0; n < N; ++n) {
            xh[n] = (in[n] - mean) * inv;
            out[n] = scale.v[c] * xh[n] + shift.v[c];
        }
    }
    return y;
}

Vol norm_backward(const Vol& dy, const NormCache& cache, const ParamTensor& scale, ParamTensor& dscale,
                  ParamTensor& dshift) {
    const std::size_t N = dy.plane();
    const double n_d = static_cast<double>(N);
    Vol dx(dy.C, dy.T, dy.H, dy.W);
    for (std::size_t c = 0; c < dy.C; ++c) {
        const double* g = &dy.v[c * N];
        const double* xh = &cache.xhat.v[c * N];
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            sum_g += g[n];
            sum_gx += g[n] * xh[n];
        }
        dscale.v[c] += sum_gx;
        dshift.v[c] += sum_g;
        const double k = scale.v[c] * cache.inv_std[c] / n_d;
        double* out = &dx.v[c * N];
        for (std::size_t n = 0; n < N; ++n) out[n] = k * (n_d * g[n] - sum_g - xh[n] * sum_gx);
    }
    return dx;
}

void relu_inplace(Vol& x) {
    for (double& v : x.v) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(Vol& dy, const Vol& out) {
    for (std::size_t i = 0; i < dy.v.size(); ++i)
        if (!(out.v[i] > 0.0)) dy.v[i] = 0.0;
}

Vol maxpool_hw(const Vol& x, std::vector<std::size_t>& argmax) {
    if (x.H % 2 || x.W % 2) throw ShapeError("maxpool: spatial size must be even");
    Vol y(x.C, x.T, x.H / 2, x.W / 2);
    argmax.assign(y.v.size(), 0);
    std::size_t o = 0;
    for (std::size_t ct = 0; ct < x.C * x.T; ++ct)
        for (std::size_t h = 0; h < y.H; ++h)
            for (std::size_t w = 0; w < y.W; ++w, ++o) {
                const std::size_t base = (ct * x.H + 2 * h) * x.W + 2 * w;
                std::size_t best = base;
                for (std::size_t idx : {base + 1, base + x.W, base + x.W + 1})
                    if (x.v[idx] > x.v[best]) best = idx;
                argmax[o] = best;
                y.v[o] = x.v[best];
            }
    return y;
}

Vol maxpool_hw_backward(const Vol& dy, const std::vector<std::size_t>& argmax, const Vol& x_shape) {
    Vol dx(x_shape.C, x_shape.T, x_shape.H, x_shape.W);
    for (std::size_t o = 0; o < dy.v.size(); ++o) dx.v[argmax[o]] += dy.v[o];
    return dx;
}

Vol temporal_mean(const Vol& x) {
    const std::size_t hw = x.H * x.W;
    Vol y(x.C, 1, x.H, x.W);
    for (std::size_t c = 0; c < x.C; ++c)
        for (std::size_t t = 0; t < x.T; ++t)
            for (std::size_t i = 0; i < hw; ++i) y.v[c * hw + i] += x.v[(c * x.T + t) * hw + i];
    for (double& v : y.v) v /= static_cast<double>(x.T);
    return y;
}

Vol temporal_mean_backward(const Vol& dy, std::size_t T) {
    const std::size_t hw = dy.H * dy.W;
    Vol dx(dy.C, T, dy.H, dy.W);
    for (std::size_t c = 0; c < dy.C; ++c)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t i = 0; i < hw; ++i) dx.v[(c * T + t) * hw + i] = dy.v[c * hw + i] / static_cast<double>(T);
    return dx;
}

Vol temporal_max(const Vol& x, std::vector<std::size_t>& argmax) {
    const std::size_t hw = x.H * x.W;
    Vol y(x.C, 1, x.H, x.W);
    argmax.assign(y.v.size(), 0);
    for (std::size_t c = 0; c < x.C; ++c)
        for (std::size_t i = 0; i < hw; ++i) {
            std::size_t best = c * x.T * hw + i;
            for (std::size_t t = 1; t < x.T; ++t) {
                const std::size_t idx = (c * x.T + t) * hw + i;
                if (x.v[idx] > x.v[best]) best = idx;
            }
            argmax[c * hw + i] = best;
            y.v[c * hw + i] = x.v[best];
        }
    return y;
}

Vol temporal_max_backward(const Vol& dy, const std::vector<std::size_t>& argmax, std::size_t T) {
    Vol dx(dy.C, T, dy.H, dy.W);
    for (std::size_t o = 0; o < dy.v.size(); ++o) dx.v[argmax[o]] += dy.v[o];
    return dx;
}

Vol upsample2(const Vol& x) {
    Vol y(x.C, x.T, 2 * x.H, 2 * x.W);
    for (std::size_t ct = 0; ct < x.C * x.T; ++ct)
        for (std::size_t h = 0; h < y.H; ++h)
            for (std::size_t w = 0; w < y.W; ++w)
                y.v[(ct * y.H + h) * y.W + w] = x.v[(ct * x.H + h / 2) * x.W + w / 2];
    return y;
}

Vol upsample2_backward(const Vol& dy) {
    Vol dx(dy.C, dy.T, dy.H / 2, dy.W / 2);
    for (std::size_t ct = 0; ct < dy.C * dy.T; ++ct)
        for (std::size_t h = 0; h < dy.H; ++h)
            for (std::size_t w = 0; w < dy.W; ++w)
                dx.v[(ct * dx.H + h / 2) * dx.W + w / 2] += dy.v[(ct * dy.H + h) * dy.W + w];
    return dx;
}

void add_inplace(Vol& a, const Vol& b) {
    for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
}

}  // namespace dap::ssfcn::ops
