#include <cmath>

#include "dap/error.hpp"
#include "dap/ppg_dsp.hpp"

namespace dap::dsp {

void znormalize_rows(Matrix& m) {
    const double n = static_cast<double>(m.cols);
    for (std::size_t r = 0; r < m.rows; ++r) {
        auto row = m.row(r);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : row) var += (v - mean) * (v - mean);
        var /= n;
        if (var <= 0.0 || !std::isfinite(var)) {
            std::fill(row.begin(), row.end(), 0.0);
            continue;
        }
        const double inv_std = 1.0 / std::sqrt(var);
        for (double& v : row) v = (v - mean) * inv_std;
    }
}

std::vector<HyperPatternWindow> segment_windows(const Matrix& matrix, std::size_t window_len, std::size_t hop,
                                                const SegmentOptions& opts) {
    if (hop == 0) throw InvalidArgument("segment_windows: hop must be >= 1");
    if (window_len == 0) throw InvalidArgument("segment_windows: window length must be >= 1");
    if (2 * opts.trim >= matrix.cols) throw InvalidArgument("segment_windows: trim leaves no samples");
    const std::size_t usable = matrix.cols - 2 * opts.trim;
    if (window_len > usable)
        throw InvalidArgument("segment_windows: window length " + std::to_string(window_len) +
                              " exceeds available samples " + std::to_string(usable));

    const std::size_t count = (usable - window_len) / hop + 1;
    std::vector<HyperPatternWindow> out;
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t first = opts.trim + w * hop;
        HyperPatternWindow win;
        win.channels = Matrix(matrix.rows, window_len);
        for (std::size_t r = 0; r < matrix.rows; ++r) {
            auto src = matrix.row(r);
            std::copy(src.begin() + first, src.begin() + first + window_len, win.channels.row(r).begin());
        }
        znormalize_rows(win.channels);
        win.window_start_ms =
            opts.start_time_ms + std::llround(static_cast<double>(first) * 1000.0 / opts.sample_rate_hz);
        out.push_back(std::move(win));
    }
    return out;
}

}  // namespace dap::dsp
