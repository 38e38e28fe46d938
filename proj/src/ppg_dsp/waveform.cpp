#include <cmath>

#include "dap/error.hpp"
#include "dap/ppg_dsp.hpp"

namespace dap::dsp {

PpgSeries derivative(const PpgSeries& series, int n) {
    if (n != 1 && n != 2) throw InvalidArgument("derivative: order must be 1 or 2");
    series.validate();
    if (series.size() < 3) throw InvalidArgument("derivative: need at least 3 samples");
    const auto& x = series.samples;
    const std::size_t len = x.size();
    const double h = 1.0 / series.sample_rate_hz;
    PpgSeries out{series.sample_rate_hz, series.start_time_ms, std::vector<double>(len)};
    auto& y = out.samples;

    if (n == 1) {
        for (std::size_t i = 1; i + 1 < len; ++i) y[i] = (x[i + 1] - x[i - 1]) / (2.0 * h);
        y[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * h);
        y[len - 1] = (3.0 * x[len - 1] - 4.0 * x[len - 2] + x[len - 3]) / (2.0 * h);
    } else {
        const double h2 = h * h;
        for (std::size_t i = 1; i + 1 < len; ++i) y[i] = (x[i + 1] - 2.0 * x[i] + x[i - 1]) / h2;
        if (len >= 4) {
            y[0] = (2.0 * x[0] - 5.0 * x[1] + 4.0 * x[2] - x[3]) / h2;
            y[len - 1] = (2.0 * x[len - 1] - 5.0 * x[len - 2] + 4.0 * x[len - 3] - x[len - 4]) / h2;
        } else {
            y[0] = y[1];
            y[len - 1] = y[1];
        }
    }
    return out;
}

ExtremaList detect_extrema(const PpgSeries& series) {
    series.validate();
    if (series.size() < 3) throw InvalidArgument("detect_extrema: need at least 3 samples");
    const auto& x = series.samples;
    const std::size_t len = x.size();
    ExtremaList out;
    std::size_t i = 1;
    while (i + 1 < len) {
        const double prev = x[i - 1];
        if (x[i] == prev) {
            ++i;
            continue;
        }
        // x[i] starts a run that differs from its left neighbour.
        std::size_t j = i;
        while (j + 1 < len && x[j + 1] == x[i]) ++j;
        if (j + 1 >= len) break;  // run reaches the end: no right neighbour
        const double next = x[j + 1];
        if (x[i] > prev && x[i] > next)
            out.maxima_idx.push_back(i);
        else if (x[i] < prev && x[i] < next)
            out.minima_idx.push_back(i);
        i = j + 1;
    }
    return out;
}

}  // namespace dap::dsp
