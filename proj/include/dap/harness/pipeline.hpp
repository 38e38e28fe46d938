#pragma once

#include <vector>

#include "dap/ppg_dsp.hpp"

namespace dap::harness {

struct DspConfig {
    std::size_t decimate_factor = 20;
    int fir_order = 501;
    double window_len_s = 10.0;
    double hop_s = 5.0;
    bool trim_transient = true;

    void validate() const;
};

/// PPG branch front half: decimate, hyper-filter, window. Windows inherit
/// `label` when given.
std::vector<dsp::HyperPatternWindow> ppg_to_windows(const dsp::PpgSeries& raw, const DspConfig& cfg,
                                                    std::optional<dsp::Label> label = std::nullopt);

}  // namespace dap::harness
