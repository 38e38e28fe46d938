#include "dap/param.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "dap/error.hpp"

namespace dap {

ParamTensor::ParamTensor(std::vector<std::size_t> s, double fill)
    : shape(std::move(s)),
      v(std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{}), fill) {}

void ParamTensor::glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& x : v) x = rng.uniform(-limit, limit);
}

void sgd_step(std::span<ParamTensor* const> params, std::span<const ParamTensor* const> grads, double lr) {
    if (params.size() != grads.size()) throw ShapeError("sgd_step: parameter/gradient count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i]->v;
        const auto& g = grads[i]->v;
        if (p.size() != g.size()) throw ShapeError("sgd_step: tensor size mismatch");
        for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * g[k];
    }
}

void Adam::step(std::span<ParamTensor* const> params, std::span<const ParamTensor* const> grads, double lr) {
    if (params.size() != grads.size()) throw ShapeError("adam: parameter/gradient count mismatch");
    if (m_.empty()) {
        for (const auto* p : params) {
            m_.emplace_back(p->size(), 0.0);
            v_.emplace_back(p->size(), 0.0);
        }
    }
    if (m_.size() != params.size()) throw ShapeError("adam: parameter list changed between steps");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i]->v;
        const auto& g = grads[i]->v;
        auto& m = m_[i];
        auto& v = v_[i];
        if (p.size() != g.size() || p.size() != m.size()) throw ShapeError("adam: tensor size mismatch");
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
            v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
            p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
        }
    }
}

}  // namespace dap
