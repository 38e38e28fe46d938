#pragma once

// Internal tensor kernels for the SS-FCN. Volumes are stored channel-major
// as [C][T][H][W]; 2D feature maps are volumes with T = 1.

#include <cstddef>
#include <vector>

#include "dap/param.hpp"

namespace dap::ssfcn::ops {

struct Vol {
    std::size_t C = 0, T = 0, H = 0, W = 0;
    std::vector<double> v;

    Vol() = default;
    Vol(std::size_t c, std::size_t t, std::size_t h, std::size_t w, double fill = 0.0)
        : C(c), T(t), H(h), W(w), v(c * t * h * w, fill) {}
    std::size_t plane() const { return T * H * W; }
};

struct Kernel {
    std::size_t kt, kh, kw;
    std::size_t taps() const { return kt * kh * kw; }
};

// "Same" zero-padded convolution; w is [Cout, Cin*kt*kh*kw], b is [Cout].
Vol conv_forward(const Vol& x, const ParamTensor& w, const ParamTensor& b, Kernel k);
// Accumulates dw/db (if non-null) and writes dx (if non-null).
void conv_backward(const Vol& x, const ParamTensor& w, const Vol& dy, Kernel k, Vol* dx, ParamTensor* dw,
                   ParamTensor* db);

// Per-channel normalization over T×H×W followed by an affine transform.
struct NormCache {
    Vol xhat;
    std::vector<double> inv_std;
};
Vol norm_forward(const Vol& x, const ParamTensor& scale, const ParamTensor& shift, NormCache& cache);
Vol norm_backward(const Vol& dy, const NormCache& cache, const ParamTensor& scale, ParamTensor& dscale,
                  ParamTensor& dshift);

void relu_inplace(Vol& x);
// Zeroes dy wherever the forward ReLU output was not positive.
void relu_backward_inplace(Vol& dy, const Vol& out);

// 1×2×2 max pooling; `argmax` records the winning input index per output.
Vol maxpool_hw(const Vol& x, std::vector<std::size_t>& argmax);
Vol maxpool_hw_backward(const Vol& dy, const std::vector<std::size_t>& argmax, const Vol& x_shape);

// Collapse time: mean or max over T (argmax used for max).
Vol temporal_mean(const Vol& x);
Vol temporal_mean_backward(const Vol& dy, std::size_t T);
Vol temporal_max(const Vol& x, std::vector<std::size_t>& argmax);
Vol temporal_max_backward(const Vol& dy, const std::vector<std::size_t>& argmax, std::size_t T);

// Nearest-neighbour 2× spatial upsampling and its adjoint.
Vol upsample2(const Vol& x);
Vol upsample2_backward(const Vol& dy);

void add_inplace(Vol& a, const Vol& b);

}  // namespace dap::ssfcn::ops
