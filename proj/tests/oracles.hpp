#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's numerical code paths.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

/// |H(f)| of an FIR by direct evaluation of its DTFT sum.
inline double fir_magnitude(std::span<const double> taps, double freq_hz, double fs) {
    std::complex<double> acc{0.0, 0.0};
    const double w = 2.0 * std::numbers::pi * freq_hz / fs;
    for (std::size_t k = 0; k < taps.size(); ++k)
        acc += taps[k] * std::polar(1.0, -w * static_cast<double>(k));
    return std::abs(acc);
}

inline double to_db(double mag) { return 20.0 * std::log10(std::max(mag, 1e-300)); }

/// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        for (std::size_t i = 0; i < n; i += len)
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto w = std::polar(1.0, ang * static_cast<double>(k));
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
    }
}

/// Magnitude response on the npts-point grid (bins 0..npts/2).
inline std::vector<double> fir_response(std::span<const double> taps, std::size_t npts) {
    std::vector<std::complex<double>> a(npts, {0.0, 0.0});
    for (std::size_t k = 0; k < taps.size(); ++k) a[k] = taps[k];
    fft(a);
    std::vector<double> mag(npts / 2 + 1);
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(a[i]);
    return mag;
}

}  // namespace oracle
