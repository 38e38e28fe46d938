#include <cmath>

#include "dap/error.hpp"
#include "dap/ssfcn.hpp"

namespace dap::ssfcn {

std::vector<VideoClip> preprocess_clip(const std::vector<RawFrame>& frames, std::size_t clip_len, std::size_t divisor,
                                       double frame_rate_fps, std::int64_t start_ms) {
    if (clip_len < 1) throw InvalidArgument("clip length must be >= 1");
    if (divisor < 1) throw InvalidArgument("divisor must be >= 1");
    if (!(frame_rate_fps > 0.0)) throw InvalidArgument("frame rate must be positive");
    if (frames.empty()) throw IngestError("no frames");
    const std::size_t H = frames.front().height, W = frames.front().width, C = frames.front().channels;
    if (C != 1 && C != 3) throw IngestError("frames must have 1 or 3 channels");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& f = frames[i];
        if (f.height != H || f.width != W || f.channels != C)
            throw IngestError("frame " + std::to_string(i) + " has inconsistent dimensions");
        if (f.pixels.size() != H * W * C) throw IngestError("frame " + std::to_string(i) + " has a short pixel buffer");
    }
    if (frames.size() < clip_len)
        throw IngestError("need at least " + std::to_string(clip_len) + " frames, got " + std::to_string(frames.size()));

    // Target size: nearest multiple of `divisor` (at least one), centred crop or zero pad.
    auto fit = [&](std::size_t n) {
        const std::size_t down = n / divisor * divisor, up = down + divisor;
        if (down == 0) return up;
        return n - down <= up - n ? down : up;
    };
    const std::size_t Ho = fit(H), Wo = fit(W);
    const std::ptrdiff_t oh = (static_cast<std::ptrdiff_t>(H) - static_cast<std::ptrdiff_t>(Ho)) / 2;
    const std::ptrdiff_t ow = (static_cast<std::ptrdiff_t>(W) - static_cast<std::ptrdiff_t>(Wo)) / 2;

    const std::size_t hop = std::max<std::size_t>(1, clip_len / 2);
    std::vector<VideoClip> clips;
    for (std::size_t s = 0; s + clip_len <= frames.size(); s += hop) {
        VideoClip clip(clip_len, Ho, Wo, C);
        clip.frame_rate_fps = frame_rate_fps;
        clip.clip_start_ms = start_ms + static_cast<std::int64_t>(std::llround(static_cast<double>(s) * 1000.0 /
                                                                                 frame_rate_fps));
        for (std::size_t t = 0; t < clip_len; ++t) {
            const auto& f = frames[s + t];
            for (std::size_t h = 0; h < Ho; ++h) {
                const std::ptrdiff_t sh = static_cast<std::ptrdiff_t>(h) + oh;
                if (sh < 0 || sh >= static_cast<std::ptrdiff_t>(H)) continue;
                for (std::size_t w = 0; w < Wo; ++w) {
                    const std::ptrdiff_t sw = static_cast<std::ptrdiff_t>(w) + ow;
                    if (sw < 0 || sw >= static_cast<std::ptrdiff_t>(W)) continue;
                    for (std::size_t c = 0; c < C; ++c)
                        clip.at(t, h, w, c) =
                            f.pixels[(static_cast<std::size_t>(sh) * W + static_cast<std::size_t>(sw)) * C + c] / 255.0;
                }
            }
        }
        clips.push_back(std::move(clip));
    }
    return clips;
}

}  // namespace dap::ssfcn
