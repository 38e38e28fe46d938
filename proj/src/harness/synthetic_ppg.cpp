#include <cmath>
#include <numbers>

#include "dap/error.hpp"
#include "dap/harness/synthetic.hpp"
#include "dap/rng.hpp"

namespace dap::harness {

namespace {

// Per-beat waveform, expressed in fractions of the nominal period.
constexpr double kSystolicCenter = 0.20;
constexpr double kSystolicRise = 0.06;
constexpr double kSystolicFall = 0.14;
constexpr double kDicroticCenter = 0.55;
constexpr double kDicroticWidth = 0.07;
constexpr double kDicroticAmp = 0.25;
constexpr double kRespHz = 0.2;
constexpr double kRespAmp = 0.2;

constexpr double kDrowsyJitter = 0.02;
constexpr double kWakefulJitter = 0.15;
constexpr double kPresetHrLo = 0.95;
constexpr double kPresetHrHi = 1.25;
constexpr double kPresetNoise = 0.05;

double gauss(double x, double sigma) { return std::exp(-0.5 * (x / sigma) * (x / sigma)); }

}  // namespace

void SyntheticPpgSpec::validate() const {
    if (!(heart_rate_hz >= 0.6 && heart_rate_hz <= 3.0)) throw InvalidArgument("heart_rate_hz must be in [0.6, 3.0]");
    if (!(duration_s > 0.0)) throw InvalidArgument("duration_s must be positive");
    if (!(hr_jitter >= 0.0) || !(noise_std >= 0.0)) throw InvalidArgument("jitter and noise must be non-negative");
    if (!(sample_rate_hz > 0.0)) throw InvalidArgument("sample rate must be positive");
}

SyntheticPpgSpec SyntheticPpgSpec::preset(dsp::Label cls, double duration_s, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "ppg.preset"));
    SyntheticPpgSpec s;
    s.cls = cls;
    s.heart_rate_hz = rng.uniform(kPresetHrLo, kPresetHrHi);
    s.hr_jitter = cls == dsp::Label::wakeful ? kWakefulJitter : kDrowsyJitter;
    s.noise_std = kPresetNoise;
    s.duration_s = duration_s;
    s.seed = seed;
    return s;
}

LabeledPpg gen_synthetic_ppg(const SyntheticPpgSpec& spec) {
    spec.validate();
    Rng rng(derive_seed(spec.seed, "ppg.gen"));
    const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate_hz));
    const double period = 1.0 / spec.heart_rate_hz;

    // Beat onsets with jittered periods, starting one period before t = 0 so
    // the first samples are not empty.
    std::vector<double> onsets;
    double t = -period * rng.uniform();
    while (t < spec.duration_s + period) {
        onsets.push_back(t);
        const double step = period * (1.0 + spec.hr_jitter * rng.normal());
        t += std::max(step, 0.3 * period);
    }
    const double resp_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

    LabeledPpg out{dsp::PpgSeries{spec.sample_rate_hz, 0, std::vector<double>(n, 0.0)}, spec.cls};
    auto& x = out.series.samples;
    const double dt = 1.0 / spec.sample_rate_hz;
    std::size_t first_beat = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = static_cast<double>(i) * dt;
        while (first_beat + 1 < onsets.size() && onsets[first_beat + 1] + 2.0 * period < ti) ++first_beat;
        double v = 0.0;
        for (std::size_t b = first_beat; b < onsets.size() && onsets[b] <= ti + period; ++b) {
            const double u = (ti - onsets[b]) / period;  // phase within beat b
            const double ds = u - kSystolicCenter;
            v += gauss(ds, ds < 0.0 ? kSystolicRise : kSystolicFall);
            v += kDicroticAmp * gauss(u - kDicroticCenter, kDicroticWidth);
        }
        v += kRespAmp * std::sin(2.0 * std::numbers::pi * kRespHz * ti + resp_phase);
        v += spec.noise_std * rng.normal();
        x[i] = v;
    }
    return out;
}

}  // namespace dap::harness
