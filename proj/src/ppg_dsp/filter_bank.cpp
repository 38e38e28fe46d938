#include <array>

#include "dap/error.hpp"
#include "dap/ppg_dsp.hpp"

namespace dap::dsp {

namespace {

// Low-pass row of the first table; the companion high-pass is fixed at 0.5 Hz.
// A "0" entry means the channel has no low-pass stage.
constexpr std::array<double, 11> kLowPassSetup = {0.0, 1.4, 2.9, 2.5, 3.8, 3.9, 4.0, 4.5, 5.0, 5.3, 6.9};
constexpr double kLowPassSetupHighPass = 0.5;

// High-pass row of the second table; the companion low-pass is fixed at 7 Hz.
constexpr std::array<double, 11> kHighPassSetup = {0.5, 1.2, 2.6, 2.7, 3.3, 3.5, 4.0, 4.4, 5.0, 5.7, 6.4};
constexpr double kHighPassSetupLowPass = 7.0;

}  // namespace

FilterBankSpec build_filter_bank(double sample_rate_hz, int order) {
    if (!(sample_rate_hz >= 15.0))
        throw InvalidSpec("filter bank needs a sample rate >= 15 Hz, got " + std::to_string(sample_rate_hz));
    FilterBankSpec bank;
    bank.sample_rate_hz = sample_rate_hz;
    bank.channels.reserve(kBankChannels);
    for (double lp : kLowPassSetup) {
        if (lp == 0.0)
            bank.channels.push_back(FilterSpec::high_pass(kLowPassSetupHighPass, order));
        else
            bank.channels.push_back(FilterSpec::band_pass(kLowPassSetupHighPass, lp, order));
    }
    for (double hp : kHighPassSetup) bank.channels.push_back(FilterSpec::band_pass(hp, kHighPassSetupLowPass, order));
    bank.validate();
    return bank;
}

void FilterBankSpec::validate() const {
    if (channels.size() != kBankChannels)
        throw InvalidSpec("filter bank must have 22 channels, got " + std::to_string(channels.size()));
    for (const auto& ch : channels) ch.validate(sample_rate_hz);
}

std::vector<std::vector<double>> channel_stages(const FilterBankSpec& bank, std::size_t c) {
    const auto& spec = bank.channels.at(c);
    auto stages = design_stages(spec, bank.sample_rate_hz);
    if (spec.kind != FilterKind::low_pass) stages.insert(stages.begin(), stages.front());
    return stages;
}

std::vector<double> channel_taps(const FilterBankSpec& bank, std::size_t c) {
    const auto stages = channel_stages(bank, c);
    std::vector<double> taps = stages.front();
    for (std::size_t s = 1; s < stages.size(); ++s) {
        std::vector<double> next(taps.size() + stages[s].size() - 1, 0.0);
        for (std::size_t i = 0; i < taps.size(); ++i)
            for (std::size_t j = 0; j < stages[s].size(); ++j) next[i + j] += taps[i] * stages[s][j];
        taps = std::move(next);
    }
    return taps;
}

std::size_t bank_transient(const FilterBankSpec& bank) {
    std::size_t worst = 0;
    for (std::size_t c = 0; c < bank.channels.size(); ++c) {
        std::size_t span = 0;
        for (const auto& st : channel_stages(bank, c)) span += (st.size() - 1) / 2;
        worst = std::max(worst, span);
    }
    return worst;
}

Matrix apply_filter_bank(const PpgSeries& series, const FilterBankSpec& bank) {
    series.validate();
    bank.validate();
    if (series.sample_rate_hz != bank.sample_rate_hz)
        throw InvalidSpec("filter bank designed for " + std::to_string(bank.sample_rate_hz) +
                          " Hz applied to a " + std::to_string(series.sample_rate_hz) + " Hz series");
    Matrix out(bank.channels.size(), series.size());
    // Channels are independent; each row is written by exactly one chain.
    for (std::size_t c = 0; c < bank.channels.size(); ++c) {
        std::vector<double> y = series.samples;
        for (const auto& taps : channel_stages(bank, c)) y = apply_fir(y, taps);
        std::copy(y.begin(), y.end(), out.row(c).begin());
    }
    return out;
}

}  // namespace dap::dsp
