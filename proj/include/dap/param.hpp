#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dap/rng.hpp"

namespace dap {

/// A learnable tensor: shape plus row-major values.
struct ParamTensor {
    std::vector<std::size_t> shape;
    std::vector<double> v;

    ParamTensor() = default;
    explicit ParamTensor(std::vector<std::size_t> s, double fill = 0.0);

    std::size_t size() const { return v.size(); }

    /// Glorot/Xavier uniform in [-sqrt(6/(fan_in+fan_out)), +sqrt(...)].
    void glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out);

    friend bool operator==(const ParamTensor&, const ParamTensor&) = default;
};

/// params -= lr * grads, tensor by tensor. Both lists must line up.
void sgd_step(std::span<ParamTensor* const> params, std::span<const ParamTensor* const> grads, double lr);

/// Adam state (first and second moments) for a list of tensors.
class Adam {
public:
    Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(std::span<ParamTensor* const> params, std::span<const ParamTensor* const> grads, double lr);

private:
    double beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace dap
