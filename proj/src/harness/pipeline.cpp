#include <cmath>

#include "dap/error.hpp"
#include "dap/harness/pipeline.hpp"

namespace dap::harness {

void DspConfig::validate() const {
    if (decimate_factor < 1) throw ConfigError("dsp.decimate_factor must be >= 1");
    if (fir_order < 1 || fir_order % 2 == 0) throw ConfigError("dsp.fir_order must be odd and positive");
    if (!(window_len_s > 0.0)) throw ConfigError("dsp.window_len_s must be positive");
    if (!(hop_s > 0.0)) throw ConfigError("dsp.hop_s must be positive");
}

std::vector<dsp::HyperPatternWindow> ppg_to_windows(const dsp::PpgSeries& raw, const DspConfig& cfg,
                                                    std::optional<dsp::Label> label) {
    cfg.validate();
    const auto low = dsp::decimate(raw, cfg.decimate_factor, cfg.fir_order);
    const auto bank = dsp::build_filter_bank(low.sample_rate_hz, cfg.fir_order);
    const auto matrix = dsp::apply_filter_bank(low, bank);

    const auto window_len = static_cast<std::size_t>(std::llround(cfg.window_len_s * low.sample_rate_hz));
    const auto hop = static_cast<std::size_t>(std::llround(cfg.hop_s * low.sample_rate_hz));
    dsp::SegmentOptions opts;
    opts.trim = cfg.trim_transient ? dsp::bank_transient(bank) : 0;
    opts.start_time_ms = low.start_time_ms;
    opts.sample_rate_hz = low.sample_rate_hz;
    auto windows = dsp::segment_windows(matrix, window_len, std::max<std::size_t>(hop, 1), opts);
    for (auto& w : windows) w.label = label;
    return windows;
}

}  // namespace dap::harness
