#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dap/matrix.hpp"
#include "dap/param.hpp"
#include "dap/saliency_eval.hpp"

namespace dap::ssfcn {

// T × H × W × C tensor, row-major with the channel index fastest.
struct VideoClip {
    std::size_t T = 0, H = 0, W = 0, C = 1;
    std::vector<double> frames;
    double frame_rate_fps = 30.0;
    std::int64_t clip_start_ms = 0;

    VideoClip() = default;
    VideoClip(std::size_t t, std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
        : T(t), H(h), W(w), C(c), frames(t * h * w * c, fill) {}

    double& at(std::size_t t, std::size_t h, std::size_t w, std::size_t c = 0) {
        return frames[((t * H + h) * W + w) * C + c];
    }
    double at(std::size_t t, std::size_t h, std::size_t w, std::size_t c = 0) const {
        return frames[((t * H + h) * W + w) * C + c];
    }
    // Checks T ≥ 1, C ∈ {1,3}, values finite and in [0,1]. Spatial
    // divisibility depends on the network depth and is checked by the forward pass.
    void validate() const;
};

enum class Bridge { mean, max };
enum class SsfcnOptimizer { sgd, adam };

std::string to_string(Bridge b);
Bridge parse_bridge(const std::string& s);

struct SsfcnConfig {
    std::size_t clip_len = 8;
    std::vector<std::size_t> encoder_channels{8, 16, 32, 64, 64};  // one entry per encoder block
    std::size_t decoder_blocks = 5;                                 // must equal encoder_channels.size()
    std::size_t input_channels = 1;
    Bridge bridge = Bridge::mean;
    bool separable = false;
    std::uint64_t seed = 0;
    double learning_rate = 1e-3;
    SsfcnOptimizer optimizer = SsfcnOptimizer::adam;

    void validate() const;  // throws InvalidSpec
    std::size_t encoder_blocks() const { return encoder_channels.size(); }
    std::size_t spatial_divisor() const { return std::size_t{1} << encoder_blocks(); }
    // Output channels of decoder block j (mirror of the encoder widths).
    std::size_t decoder_channels(std::size_t j) const;

    bool operator==(const SsfcnConfig&) const = default;
};

// One (possibly factorized) convolution: `w` is 3×3×3 over all input channels;
// with the separable option `w` is 1×3×3 and `tw` a 3×1×1 conv applied after it.
// Convolutions feeding a normalization carry no bias (the norm shift absorbs it).
struct ConvUnit {
    ParamTensor w;                  // [Cout, Cin*kt*kh*kw]
    std::optional<ParamTensor> tw;  // temporal factor (separable only)
};

struct NormParams {
    ParamTensor scale, shift;
};

struct EncoderBlockParams {
    ConvUnit conv1;
    NormParams norm1;
    ConvUnit conv2;
    NormParams norm2;
};

struct DecoderBlockParams {
    ParamTensor conv_w;  // 3×3 spatial conv, no bias
    NormParams norm;
    std::optional<ParamTensor> proj_w;  // 1×1 residual projection when widths differ
};

struct SsfcnParams {
    SsfcnConfig config;
    std::vector<EncoderBlockParams> encoder;
    std::vector<DecoderBlockParams> decoder;
    ParamTensor head_w, head_b;

    // Stable order: encoder blocks, decoder blocks, head.
    std::vector<ParamTensor*> tensors();
    std::vector<const ParamTensor*> tensors() const;
    SsfcnParams zeros_like() const;
    bool operator==(const SsfcnParams&) const;
};

SsfcnParams init_params(const SsfcnConfig& config);

// Predicted map for the last frame of the clip (H × W, values in [0,1]).
saliency::SaliencyMap ssfcn_forward(const SsfcnParams& params, const VideoClip& clip);

// Encoder output before the temporal bridge, laid out [C][T][H][W].
struct FeatureVolume {
    std::size_t C = 0, T = 0, H = 0, W = 0;
    std::vector<double> values;
};
FeatureVolume ssfcn_encode(const SsfcnParams& params, const VideoClip& clip);

// Mean per-pixel BCE of the current prediction against `target` and its
// gradient w.r.t. every parameter (same layout as params.tensors()).
struct SsfcnLossGrad {
    double loss = 0.0;
    SsfcnParams grad;
    Matrix prediction;
};
SsfcnLossGrad ssfcn_loss_and_grad(const SsfcnParams& params, const VideoClip& clip, const Matrix& target);

// Mean BCE between a prediction in [0,1] and a target in [0,1].
double bce(const Matrix& pred, const Matrix& target);

// One plain gradient-descent step with config.learning_rate; returns the loss
// measured before the update.
double ssfcn_train_step(SsfcnParams& params, const VideoClip& clip, const Matrix& target);

// Stateful trainer honouring config.optimizer (Adam keeps moment estimates).
class SsfcnTrainer {
public:
    explicit SsfcnTrainer(SsfcnParams params);
    double step(const VideoClip& clip, const Matrix& target);
    const SsfcnParams& params() const { return params_; }

private:
    SsfcnParams params_;
    Adam adam_;
};

// Raw 8-bit frames (all H × W × C) → [0,1] clips, center crop/zero-pad to a
// multiple of `divisor`, sliding windows of length T with hop max(1, T/2).
struct RawFrame {
    std::size_t height = 0, width = 0, channels = 1;
    std::vector<std::uint8_t> pixels;  // row-major, channel fastest
};
std::vector<VideoClip> preprocess_clip(const std::vector<RawFrame>& frames, std::size_t clip_len,
                                       std::size_t divisor = 32, double frame_rate_fps = 30.0,
                                       std::int64_t start_ms = 0);

// Checkpoint: "SSF1", config block, then every tensor's f64 values in tensors() order, little-endian.
void save_checkpoint(const SsfcnParams& params, const std::filesystem::path& path);
SsfcnParams load_checkpoint(const std::filesystem::path& path);

}  // namespace dap::ssfcn
