#include <cmath>

#include "dap/error.hpp"
#include "dap/ppg_dsp.hpp"

namespace dap::dsp {

void PpgSeries::validate() const {
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
        throw InvalidArgument("PpgSeries: sample rate must be positive");
    if (samples.empty()) throw InvalidArgument("PpgSeries: empty series");
    for (double v : samples)
        if (!std::isfinite(v)) throw InvalidArgument("PpgSeries: non-finite sample");
}

std::int64_t PpgSeries::time_ms(std::size_t i) const {
    return start_time_ms + std::llround(static_cast<double>(i) * 1000.0 / sample_rate_hz);
}

}  // namespace dap::dsp
