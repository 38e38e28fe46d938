#include <cmath>
#include <numbers>
#include <string>

#include "dap/error.hpp"
#include "dap/ppg_dsp.hpp"

namespace dap::dsp {

namespace {

// Hamming-windowed sinc low-pass normalised to unity DC gain.
std::vector<double> windowed_sinc_lowpass(double cutoff_hz, double fs, int order) {
    const auto n = static_cast<std::size_t>(order);
    const double fc = cutoff_hz / fs;  // cycles per sample
    const double mid = 0.5 * static_cast<double>(order - 1);
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = static_cast<double>(i) - mid;
        const double sinc = (m == 0.0) ? 2.0 * fc
                                       : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
        const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                 static_cast<double>(order - 1));
        h[i] = sinc * w;
    }
    // Summation in symmetric pairs keeps the result exactly symmetric.
    double sum = 0.0;
    for (double v : h) sum += v;
    for (double& v : h) v /= sum;
    for (std::size_t i = 0; i < n / 2; ++i) h[n - 1 - i] = h[i];
    return h;
}

std::vector<double> spectral_inversion(std::vector<double> lp) {
    for (double& v : lp) v = -v;
    const std::size_t c = lp.size() / 2;
    lp[c] += 1.0;
    return lp;
}

std::vector<double> convolve_full(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n / 2; ++i) out[n - 1 - i] = out[i];
    return out;
}

}  // namespace

FilterSpec FilterSpec::low_pass(double cutoff_hz, int order) {
    return FilterSpec{FilterKind::low_pass, 0.0, cutoff_hz, order};
}

FilterSpec FilterSpec::high_pass(double cutoff_hz, int order) {
    return FilterSpec{FilterKind::high_pass, cutoff_hz, std::nullopt, order};
}

FilterSpec FilterSpec::band_pass(double low_hz, double high_hz, int order) {
    return FilterSpec{FilterKind::band_pass, low_hz, high_hz, order};
}

void FilterSpec::validate(double sample_rate_hz) const {
    if (!(sample_rate_hz > 0.0)) throw InvalidSpec("sample rate must be positive");
    if (order < 1 || order % 2 == 0)
        throw InvalidSpec("filter order must be odd and positive, got " + std::to_string(order));
    const double nyquist = 0.5 * sample_rate_hz;
    auto check = [&](double fc, const char* what) {
        if (!(fc > 0.0)) throw InvalidSpec(std::string(what) + " cutoff must be positive");
        if (fc >= nyquist)
            throw InvalidSpec(std::string(what) + " cutoff " + std::to_string(fc) + " Hz is not below Nyquist " +
                              std::to_string(nyquist) + " Hz");
    };
    switch (kind) {
        case FilterKind::low_pass:
            if (!cutoff_high_hz) throw InvalidSpec("low-pass filter needs cutoff_high_hz");
            check(*cutoff_high_hz, "low-pass");
            break;
        case FilterKind::high_pass:
            check(cutoff_low_hz, "high-pass");
            break;
        case FilterKind::band_pass:
            if (!cutoff_high_hz) throw InvalidSpec("band-pass filter needs cutoff_high_hz");
            check(cutoff_low_hz, "band-pass low");
            check(*cutoff_high_hz, "band-pass high");
            if (!(cutoff_low_hz < *cutoff_high_hz)) throw InvalidSpec("band-pass requires low < high cutoff");
            break;
    }
}

std::vector<std::vector<double>> design_stages(const FilterSpec& spec, double sample_rate_hz) {
    spec.validate(sample_rate_hz);
    switch (spec.kind) {
        case FilterKind::low_pass:
            return {windowed_sinc_lowpass(*spec.cutoff_high_hz, sample_rate_hz, spec.order)};
        case FilterKind::high_pass:
            return {spectral_inversion(windowed_sinc_lowpass(spec.cutoff_low_hz, sample_rate_hz, spec.order))};
        case FilterKind::band_pass:
            return {spectral_inversion(windowed_sinc_lowpass(spec.cutoff_low_hz, sample_rate_hz, spec.order)),
                    windowed_sinc_lowpass(*spec.cutoff_high_hz, sample_rate_hz, spec.order)};
    }
    return {};
}

std::vector<double> design_fir(const FilterSpec& spec, double sample_rate_hz) {
    auto stages = design_stages(spec, sample_rate_hz);
    if (stages.size() == 1) return std::move(stages.front());
    return convolve_full(stages[0], stages[1]);
}

std::vector<double> apply_fir(std::span<const double> x, std::span<const double> taps) {
    if (taps.empty()) throw InvalidArgument("apply_fir: empty taps");
    if (x.empty()) throw InvalidArgument("apply_fir: empty series");
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const auto len = static_cast<std::ptrdiff_t>(taps.size());
    const std::ptrdiff_t delay = (len - 1) / 2;
    std::vector<double> y(x.size(), 0.0);
    // y[i] = sum_k taps[k] * x[i + delay - k], zero outside [0, n).
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t k_lo = std::max<std::ptrdiff_t>(0, i + delay - (n - 1));
        const std::ptrdiff_t k_hi = std::min<std::ptrdiff_t>(len - 1, i + delay);
        double acc = 0.0;
        for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) acc += taps[k] * x[i + delay - k];
        y[i] = acc;
    }
    return y;
}

PpgSeries apply_fir(const PpgSeries& series, std::span<const double> taps) {
    series.validate();
    PpgSeries out{series.sample_rate_hz, series.start_time_ms, apply_fir(series.samples, taps)};
    return out;
}

PpgSeries decimate(const PpgSeries& series, std::size_t factor, int order) {
    if (factor == 0) throw InvalidArgument("decimate: factor must be >= 1");
    series.validate();
    if (series.size() < factor) throw InvalidArgument("decimate: series shorter than factor");
    if (factor == 1) return series;

    const double out_rate = series.sample_rate_hz / static_cast<double>(factor);
    const double cutoff = 0.8 * 0.5 * out_rate;
    const auto taps = design_fir(FilterSpec::low_pass(cutoff, order), series.sample_rate_hz);

    const auto n = static_cast<std::ptrdiff_t>(series.size());
    const auto len = static_cast<std::ptrdiff_t>(taps.size());
    const std::ptrdiff_t delay = (len - 1) / 2;
    const auto& x = series.samples;
    const std::size_t out_len = series.size() / factor;

    PpgSeries out{out_rate, series.start_time_ms, std::vector<double>(out_len)};
    for (std::size_t m = 0; m < out_len; ++m) {
        const auto i = static_cast<std::ptrdiff_t>(m * factor);
        double acc = 0.0;
        for (std::ptrdiff_t k = 0; k < len; ++k) {
            const std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(i + delay - k, 0, n - 1);
            acc += taps[k] * x[j];
        }
        out.samples[m] = acc;
    }
    return out;
}

}  // namespace dap::dsp
