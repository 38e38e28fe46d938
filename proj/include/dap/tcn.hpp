#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "dap/param.hpp"
#include "dap/ppg_dsp.hpp"

namespace dap::tcn {

enum class DilationSchedule { increment, doubling };

struct TcnConfig {
    int num_blocks = 12;
    int kernel_size = 3;
    DilationSchedule dilation_schedule = DilationSchedule::increment;
    int channels_per_block = 16;
    double dropout_rate = 0.1;
    int num_classes = 2;
    int input_channels = 22;
    std::uint64_t seed = 0;
    /// When set, activation[t] depends only on inputs before t (the input is
    /// delayed by one sample at the network entry). When clear, the usual
    /// causal convolution (inputs up to and including t) is used.
    bool strict_causal = true;

    void validate() const;

    /// Dilation of block b (0-based): increment gives 2,3,4,...; doubling 2,4,8,...
    int dilation(int block) const;

    friend bool operator==(const TcnConfig&, const TcnConfig&) = default;
};

/// Number of input samples that can influence one output activation.
std::size_t receptive_field(const TcnConfig& config);

struct TcnBlockParams {
    ParamTensor conv1_w, conv1_b;     // C x Cin x K, C
    ParamTensor norm1_scale, norm1_shift;
    ParamTensor conv2_w, conv2_b;     // C x C x K, C
    ParamTensor norm2_scale, norm2_shift;
    std::optional<ParamTensor> proj_w;  // C x Cin, only when Cin != C
};

struct TcnParams {
    TcnConfig config;
    std::vector<TcnBlockParams> blocks;
    ParamTensor head_w, head_b;  // classes x C, classes

    /// All tensors in declaration order (block by block, then the head).
    std::vector<ParamTensor*> tensors();
    std::vector<const ParamTensor*> tensors() const;

    /// Same shapes, every value zero.
    TcnParams zeros_like() const;

    friend bool operator==(const TcnParams& a, const TcnParams& b);
};

TcnParams init_params(const TcnConfig& config);

struct AttentionScore {
    double value = 0.5;  ///< probability of the wakeful class
    std::int64_t window_start_ms = 0;
};

enum class Mode { train, eval };

/// Intermediate activations of one block, each channels x time.
struct BlockCache {
    Matrix input;       // block input (after the entry delay for block 0)
    Matrix conv1, norm1_hat, relu1, drop1;
    Matrix conv2, norm2_hat, relu2;
    Matrix output;
    std::vector<double> inv_std1, inv_std2;  // per time step
    std::vector<double> mask;                // per channel, already scaled
};

struct ForwardCache {
    std::vector<BlockCache> blocks;
    std::vector<double> pooled;
    std::vector<double> probs;
};

struct ForwardResult {
    AttentionScore score;
    ForwardCache cache;
};

/// Runs the network. In train mode each block draws one spatial-dropout
/// mask per channel from a generator seeded with `dropout_seed`.
ForwardResult forward(const TcnParams& params, const dsp::HyperPatternWindow& window, Mode mode,
                      std::uint64_t dropout_seed = 0);

/// Cross-entropy loss of a cached forward pass and its parameter gradients.
struct LossGrad {
    double loss = 0.0;
    TcnParams grad;
};
LossGrad backward(const TcnParams& params, const ForwardCache& cache, dsp::Label label);

/// Convenience: forward + backward for one labelled window.
LossGrad loss_and_grad(const TcnParams& params, const dsp::HyperPatternWindow& window, Mode mode,
                       std::uint64_t dropout_seed = 0);

AttentionScore predict_score(const TcnParams& params, const dsp::HyperPatternWindow& window);

enum class Optimizer { sgd, adam };

struct TrainOptions {
    int epochs = 10;
    double learning_rate = 1e-3;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;  ///< shuffling and dropout
    Optimizer optimizer = Optimizer::adam;
    std::function<void(int epoch, double loss, const TcnParams&)> on_epoch;  ///< optional progress hook
};

struct TrainResult {
    TcnParams params;
    std::vector<double> loss_history;  ///< mean training loss per epoch
};

/// Mini-batch gradient descent (Adam or plain SGD) on 2-class cross-entropy. Gradients of a
/// batch are accumulated in dataset order, so the run is bit-reproducible.
TrainResult train(TcnParams params, const std::vector<dsp::HyperPatternWindow>& dataset, const TrainOptions& opts);

/// Fraction of labelled windows whose predicted class matches the label.
double accuracy(const TcnParams& params, const std::vector<dsp::HyperPatternWindow>& dataset);

/// Binary checkpoint: "TCN1", config block, tensors in declaration order,
/// all little-endian with 64-bit floats.
void save_checkpoint(const TcnParams& params, const std::filesystem::path& path);
TcnParams load_checkpoint(const std::filesystem::path& path);

}  // namespace dap::tcn
