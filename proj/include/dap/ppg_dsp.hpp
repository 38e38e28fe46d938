#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dap/matrix.hpp"

namespace dap::dsp {

/// Uniformly sampled PPG amplitudes.
struct PpgSeries {
    double sample_rate_hz = 0.0;
    std::int64_t start_time_ms = 0;
    std::vector<double> samples;

    /// Throws InvalidArgument when the series breaks its invariants
    /// (rate <= 0, empty, non-finite samples).
    void validate() const;

    std::size_t size() const { return samples.size(); }

    /// Timestamp of sample i, rounded to the nearest millisecond.
    std::int64_t time_ms(std::size_t i) const;
};

enum class FilterKind { low_pass, high_pass, band_pass };

/// Windowed-sinc (Hamming) FIR specification. Low-pass uses cutoff_high_hz,
/// high-pass uses cutoff_low_hz, band-pass uses both.
struct FilterSpec {
    FilterKind kind = FilterKind::low_pass;
    double cutoff_low_hz = 0.0;
    std::optional<double> cutoff_high_hz;
    int order = 501;

    static FilterSpec low_pass(double cutoff_hz, int order);
    static FilterSpec high_pass(double cutoff_hz, int order);
    static FilterSpec band_pass(double low_hz, double high_hz, int order);

    void validate(double sample_rate_hz) const;

    friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

inline constexpr std::size_t kBankChannels = 22;

/// The 22-channel hyper-filter bank: 11 low-pass setups (fixed 0.5 Hz
/// high-pass) followed by 11 high-pass setups (fixed 7 Hz low-pass).
struct FilterBankSpec {
    double sample_rate_hz = 0.0;
    std::vector<FilterSpec> channels;

    void validate() const;
};

/// Taps of a designed filter. Band-pass filters are the convolution of a
/// high-pass and a low-pass kernel and therefore have 2*order-1 taps.
std::vector<double> design_fir(const FilterSpec& spec, double sample_rate_hz);

/// The individual stages of a filter, in application order.
std::vector<std::vector<double>> design_stages(const FilterSpec& spec, double sample_rate_hz);

/// Zero-phase convolution: the (len-1)/2 group delay is removed and the
/// input is zero-padded at both edges. Output length equals input length.
PpgSeries apply_fir(const PpgSeries& series, std::span<const double> taps);
std::vector<double> apply_fir(std::span<const double> x, std::span<const double> taps);

/// Anti-alias low-pass (cutoff 0.8 of the new Nyquist, `order` taps) and
/// keep every factor-th sample. Edges are extended by holding the boundary
/// value so a constant input stays constant.
PpgSeries decimate(const PpgSeries& series, std::size_t factor, int order = 501);

FilterBankSpec build_filter_bank(double sample_rate_hz, int order = 501);

/// Kernels applied in sequence for bank channel c. The high-pass stage is
/// applied twice (squared magnitude) so the 0.5 Hz edge keeps >= 50 dB of
/// rejection near DC at order 501.
std::vector<std::vector<double>> channel_stages(const FilterBankSpec& bank, std::size_t c);

/// Equivalent single kernel of channel c (convolution of its stages).
std::vector<double> channel_taps(const FilterBankSpec& bank, std::size_t c);

/// Row i is the output of channel i's stage chain; all rows share the
/// input's time base.
Matrix apply_filter_bank(const PpgSeries& series, const FilterBankSpec& bank);

/// Samples at each edge whose value is influenced by zero padding.
std::size_t bank_transient(const FilterBankSpec& bank);

/// Central-difference derivative of order 1 or 2 (one-sided second-order
/// stencils at the endpoints).
PpgSeries derivative(const PpgSeries& series, int n);

struct ExtremaList {
    std::vector<std::size_t> maxima_idx;
    std::vector<std::size_t> minima_idx;
};

/// Local extrema. A run of equal values bounded on both sides by lower
/// (higher) neighbours yields a single maximum (minimum) at the run's
/// first index. Endpoints are never extrema.
ExtremaList detect_extrema(const PpgSeries& series);

enum class Label : int { drowsy = 0, wakeful = 1 };

struct HyperPatternWindow {
    Matrix channels;
    std::int64_t window_start_ms = 0;
    std::optional<Label> label;
};

struct SegmentOptions {
    std::size_t trim = 0;  ///< samples discarded at each edge before windowing
    std::int64_t start_time_ms = 0;
    double sample_rate_hz = 50.0;
};

/// Sliding windows over a channels x time matrix, each row z-normalised
/// (population variance); constant rows become zero rows.
std::vector<HyperPatternWindow> segment_windows(const Matrix& matrix, std::size_t window_len,
                                                std::size_t hop, const SegmentOptions& opts = {});

/// In-place per-row z-normalisation.
void znormalize_rows(Matrix& m);

}  // namespace dap::dsp
