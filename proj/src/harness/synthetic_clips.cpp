#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dap/error.hpp"
#include "dap/harness/synthetic.hpp"
#include "dap/rng.hpp"

namespace dap::harness {

namespace {

// Smooth static background: a sum of a few random plane waves, scaled so its
// peak deviation is `amplitude` around a mid-grey level of 0.25.
Matrix texture(std::size_t H, std::size_t W, double amplitude, Rng& rng) {
    constexpr int kWaves = 6;
    struct Wave {
        double ky, kx, phase;
    };
    std::vector<Wave> waves;
    for (int i = 0; i < kWaves; ++i) {
        const double freq = rng.uniform(0.05, 0.25), angle = rng.uniform(0.0, std::numbers::pi);
        waves.push_back({freq * std::sin(angle), freq * std::cos(angle), rng.uniform(0.0, 2.0 * std::numbers::pi)});
    }
    Matrix m(H, W);
    double peak = 0.0;
    for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < W; ++c) {
            double v = 0.0;
            for (const auto& w : waves) v += std::sin(w.ky * static_cast<double>(r) + w.kx * static_cast<double>(c) + w.phase);
            m(r, c) = v;
            peak = std::max(peak, std::abs(v));
        }
    for (double& v : m.data) v = 0.25 + (peak > 0.0 ? amplitude * v / peak : 0.0);
    return m;
}

std::vector<std::pair<double, double>> trajectory(const SyntheticClipSpec& s, Rng& rng) {
    const double H = static_cast<double>(s.height), W = static_cast<double>(s.width);
    const double margin = std::min({3.0 * s.blob_sigma_px, H / 4.0, W / 4.0});
    std::vector<std::pair<double, double>> out;
    if (s.motion == BlobMotion::corner_jump) {
        const std::pair<double, double> corners[4] = {
            {margin, margin}, {H - 1 - margin, W - 1 - margin}, {margin, W - 1 - margin}, {H - 1 - margin, margin}};
        const std::size_t start = rng.below(4);
        for (std::size_t t = 0; t < s.frames; ++t) out.push_back(corners[(start + t) % 4]);
        return out;
    }
    double r = rng.uniform(margin, H - 1 - margin), c = rng.uniform(margin, W - 1 - margin);
    double vr = 0.0, vc = 0.0;
    if (s.motion == BlobMotion::linear) {
        const double speed = rng.uniform(1.0, 3.0), angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        vr = speed * std::sin(angle);
        vc = speed * std::cos(angle);
    }
    auto reflect = [](double& x, double& v, double lo, double hi) {
        if (x < lo) {
            x = 2 * lo - x;
            v = -v;
        } else if (x > hi) {
            x = 2 * hi - x;
            v = -v;
        }
    };
    for (std::size_t t = 0; t < s.frames; ++t) {
        out.emplace_back(r, c);
        r += vr;
        c += vc;
        reflect(r, vr, margin, H - 1 - margin);
        reflect(c, vc, margin, W - 1 - margin);
    }
    return out;
}

}  // namespace

void SyntheticClipSpec::validate() const {
    if (frames < 1) throw InvalidSpec("synthetic clip needs at least one frame");
    if (height < 8 || width < 8) throw InvalidSpec("synthetic clip must be at least 8x8");
    if (!(frame_rate_fps > 0.0)) throw InvalidSpec("frame rate must be positive");
    if (!(blob_sigma_px > 0.0)) throw InvalidSpec("blob sigma must be positive");
    if (!(blob_flatness >= 1.0)) throw InvalidSpec("blob flatness must be >= 1");
    if (!(blob_amplitude >= 0.0) || !(texture_amplitude >= 0.0) || blob_amplitude + texture_amplitude + 0.25 > 1.0)
        throw InvalidSpec("blob and texture amplitudes must keep frames within [0,1]");
}

Matrix gaussian_blob(std::size_t height, std::size_t width, double row, double col, double sigma,
                     double flatness) {
    Matrix m(height, width);
    const double k = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
            const double dr = static_cast<double>(r) - row, dc = static_cast<double>(c) - col;
            const double q = (dr * dr + dc * dc) * k;
            m(r, c) = std::exp(-(flatness == 1.0 ? q : std::pow(q, flatness)));
        }
    return m;
}

SyntheticClip gen_synthetic_clip(const SyntheticClipSpec& spec) {
    spec.validate();
    Rng rng(derive_seed(spec.seed, "clip.geometry"));
    SyntheticClip out;
    const Matrix bg = texture(spec.height, spec.width, spec.texture_amplitude, rng);
    out.centers = trajectory(spec, rng);
    out.clip = ssfcn::VideoClip(spec.frames, spec.height, spec.width, 1);
    out.clip.frame_rate_fps = spec.frame_rate_fps;
    for (std::size_t t = 0; t < spec.frames; ++t) {
        const auto [r, c] = out.centers[t];
        Matrix blob = gaussian_blob(spec.height, spec.width, r, c, spec.blob_sigma_px, spec.blob_flatness);
        for (std::size_t h = 0; h < spec.height; ++h)
            for (std::size_t w = 0; w < spec.width; ++w)
                out.clip.at(t, h, w) = std::clamp(bg(h, w) + spec.blob_amplitude * blob(h, w), 0.0, 1.0);
        out.frame_truth.push_back(std::move(blob));
    }
    out.truth = out.frame_truth.back();

    // Fixations: inverse-CDF samples from each frame's normalised density.
    Rng fix_rng(derive_seed(spec.seed, "clip.fixations"));
    for (const Matrix& density : out.frame_truth) {
        std::vector<double> cdf(density.data.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < cdf.size(); ++i) cdf[i] = acc += density.data[i];
        saliency::FixationMap fix{Matrix(spec.height, spec.width)};
        for (std::size_t k = 0; k < spec.fixations; ++k) {
            const double u = fix_rng.uniform() * acc;
            const auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            fix.fixations.data[std::min(idx, cdf.size() - 1)] = 1.0;
        }
        out.frame_fixations.push_back(std::move(fix));
    }
    out.fixation = out.frame_fixations.back();
    return out;
}

std::vector<SyntheticClip> gen_synthetic_clips(std::size_t n, std::uint64_t seed) {
    std::vector<SyntheticClip> out;
    for (std::size_t i = 0; i < n; ++i) {
        SyntheticClipSpec spec;
        spec.seed = derive_seed(seed, "clip/" + std::to_string(i));
        out.push_back(gen_synthetic_clip(spec));
    }
    return out;
}

}  // namespace dap::harness
