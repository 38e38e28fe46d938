#pragma once

#include <cstdint>
#include <vector>

#include "dap/matrix.hpp"
#include "dap/ppg_dsp.hpp"
#include "dap/saliency_eval.hpp"
#include "dap/ssfcn.hpp"

namespace dap::harness {

/// Parameters of one synthetic PPG recording.
struct SyntheticPpgSpec {
    dsp::Label cls = dsp::Label::wakeful;
    double heart_rate_hz = 1.1;
    double hr_jitter = 0.1;   ///< std of the relative beat-to-beat period change
    double noise_std = 0.02;  ///< additive white noise, in pulse-amplitude units
    double duration_s = 60.0;
    double sample_rate_hz = 1000.0;
    std::uint64_t seed = 0;

    void validate() const;

    /// Class defaults used for labelled datasets. Heart rate is drawn from
    /// the same range for both classes; only the beat-to-beat variability
    /// differs (drowsy 0.02, wakeful 0.15).
    static SyntheticPpgSpec preset(dsp::Label cls, double duration_s, std::uint64_t seed);
};

struct LabeledPpg {
    dsp::PpgSeries series;
    dsp::Label label;
};

/// Pulse train (asymmetric systolic wave plus dicrotic bump per beat) with
/// jittered periods, a 0.2 Hz respiratory baseline and Gaussian noise.
LabeledPpg gen_synthetic_ppg(const SyntheticPpgSpec& spec);

/// How the bright blob moves across the frames of a synthetic clip.
enum class BlobMotion {
    static_blob,  ///< fixed position
    linear,       ///< constant random velocity, reflecting at the borders
    corner_jump,  ///< jumps every frame, cycling top-left, bottom-right, top-right, bottom-left
};

struct SyntheticClipSpec {
    std::size_t frames = 8;
    std::size_t height = 64, width = 64;
    double frame_rate_fps = 30.0;
    BlobMotion motion = BlobMotion::linear;
    double blob_sigma_px = 3.0;       ///< std of the blob and of the truth density
    double blob_flatness = 1.0;       ///< super-Gaussian exponent p ≥ 1 (1 = Gaussian)
    double blob_amplitude = 0.6;      ///< added to the background inside the frames
    double texture_amplitude = 0.15;  ///< peak deviation of the static background
    std::size_t fixations = 16;       ///< samples drawn from each frame's density
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticClip {
    ssfcn::VideoClip clip;          ///< frames × H × W × 1, values in [0,1]
    Matrix truth;                   ///< last-frame density, peak 1
    saliency::FixationMap fixation; ///< fixations sampled from the last-frame density
    std::vector<Matrix> frame_truth;  ///< density for every frame
    std::vector<saliency::FixationMap> frame_fixations;  ///< fixations for every frame
    std::vector<std::pair<double, double>> centers;  ///< blob (row, col) per frame
};

SyntheticClip gen_synthetic_clip(const SyntheticClipSpec& spec);

/// `n` clips with default geometry and linear motion, each seeded from
/// derive_seed(seed, "clip/<i>").
std::vector<SyntheticClip> gen_synthetic_clips(std::size_t n, std::uint64_t seed);

/// Super-Gaussian bump exp(-(d²/2σ²)^p) centred at (row, col), peak 1;
/// p = 1 is the ordinary Gaussian, larger p flattens the top.
Matrix gaussian_blob(std::size_t height, std::size_t width, double row, double col, double sigma,
                     double flatness = 1.0);


}  // namespace dap::harness
