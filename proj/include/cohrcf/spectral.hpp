#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace cohrcf {

using Complex = std::complex<double>;

/// Transform coefficients X(w) at `padded_length` discrete bins.
/// `original_length` is the input length before zero padding.
struct Spectrum {
    std::vector<Complex> coefficients;
    std::size_t original_length = 0;
    std::size_t padded_length = 0;
};

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

constexpr std::size_t next_power_of_two(std::size_t n) noexcept {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Largest power of two <= n (0 for n == 0).
constexpr std::size_t floor_power_of_two(std::size_t n) noexcept {
    if (n == 0) return 0;
    std::size_t p = 1;
    while ((p << 1) <= n) p <<= 1;
    return p;
}

/// Direct O(n^2) evaluation, no padding. Used as the reference transform.
inline Spectrum dft_naive(std::span<const Complex> x) {
    detail::require(!x.empty(), ErrorCode::EmptyInput, "dft of empty sequence");
    const std::size_t n = x.size();
    std::vector<Complex> roots(n);
    for (std::size_t m = 0; m < n; ++m)
        roots[m] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n));
    Spectrum s{std::vector<Complex>(n), n, n};
    for (std::size_t k = 0; k < n; ++k) {
        Complex acc{};
        for (std::size_t j = 0; j < n; ++j) acc += x[j] * roots[(k * j) % n];
        s.coefficients[k] = acc;
    }
    return s;
}

namespace detail {

// In-place iterative radix-2 decimation-in-time; `a.size()` is a power of two.
inline void fft_in_place(std::vector<Complex>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    if (n < 2) return;

    const double sign = inverse ? 1.0 : -1.0;
    std::vector<Complex> twiddle(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k)
        twiddle[k] = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                                         static_cast<double>(n));

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const Complex t = twiddle[k * stride] * a[start + k + half];
                const Complex u = a[start + k];
                a[start + k] = u + t;
                a[start + k + half] = u - t;
            }
        }
    }
}

}  // namespace detail

/// Radix-2 FFT after zero padding to the next power of two.
inline Spectrum fft(std::span<const Complex> x) {
    detail::require(!x.empty(), ErrorCode::EmptyInput, "fft of empty sequence");
    const std::size_t padded = next_power_of_two(x.size());
    std::vector<Complex> a(padded);
    std::copy(x.begin(), x.end(), a.begin());
    detail::fft_in_place(a, false);
    return {std::move(a), x.size(), padded};
}

inline Spectrum fft(std::span<const double> x) {
    std::vector<Complex> c(x.begin(), x.end());
    return fft(std::span<const Complex>(c));
}

/// Inverse transform; returns `padded_length` samples. The first
/// `original_length` of them reproduce the forward input.
inline std::vector<Complex> ifft(const Spectrum& spectrum) {
    detail::require(is_power_of_two(spectrum.padded_length) &&
                        spectrum.coefficients.size() == spectrum.padded_length,
                    ErrorCode::InvalidArgument, "ifft needs a power-of-two spectrum");
    std::vector<Complex> a = spectrum.coefficients;
    detail::fft_in_place(a, true);
    const double scale = 1.0 / static_cast<double>(a.size());
    for (auto& v : a) v *= scale;
    return a;
}

/// |X(w)|^2 per bin.
inline std::vector<double> power_spectrum(const Spectrum& spectrum) {
    std::vector<double> out(spectrum.coefficients.size());
    std::transform(spectrum.coefficients.begin(), spectrum.coefficients.end(), out.begin(),
                   [](const Complex& c) { return std::norm(c); });
    return out;
}

/// Y(w) * conj(X(w)) per bin.
inline std::vector<Complex> cross_power(const Spectrum& x, const Spectrum& y) {
    detail::require(x.coefficients.size() == y.coefficients.size(), ErrorCode::LengthMismatch,
                    "cross power of spectra with different lengths");
    std::vector<Complex> out(x.coefficients.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = y.coefficients[k] * std::conj(x.coefficients[k]);
    return out;
}

enum class Window { rectangular, hann };

/// Welch segmenting: `segment_length` samples per segment, consecutive
/// segments overlapping by floor(overlap * segment_length) samples.
struct WelchParams {
    std::size_t segment_length = 32;
    double overlap = 0.5;
    Window window = Window::hann;

    std::size_t hop() const noexcept {
        const auto shared = static_cast<std::size_t>(overlap * static_cast<double>(segment_length));
        return std::max<std::size_t>(1, segment_length - shared);
    }

    std::size_t segment_count(std::size_t n) const noexcept {
        if (segment_length == 0 || n < segment_length) return 0;
        return (n - segment_length) / hop() + 1;
    }

    /// One-sided bins of a real segment after padding to a power of two.
    std::size_t bin_count() const noexcept { return next_power_of_two(segment_length) / 2 + 1; }
};

/// Default estimator for sequences of length n: segment length is the
/// largest power of two not above n/2, capped at `segment_cap`, never
/// below 2; 50% overlap; Hann taper.
inline WelchParams default_welch_params(std::size_t n, std::size_t segment_cap = 32,
                                        double overlap = 0.5, Window window = Window::hann) {
    const std::size_t seg = std::max<std::size_t>(2, std::min(floor_power_of_two(n / 2), segment_cap));
    return {seg, overlap, window};
}

struct CoherenceEstimate {
    std::vector<double> values;  // magnitude-squared coherence per one-sided bin
    WelchParams params;
};

/// Windowed segment spectra of one sequence, plus their averaged
/// auto-power. Precomputing this per sequence makes every pairwise
/// coherence a cheap per-bin reduction.
struct WelchSpectra {
    std::vector<std::vector<Complex>> segments;  // one-sided bins per segment
    std::vector<double> mean_power;
    WelchParams params;
    std::size_t length = 0;
};

namespace detail {

inline void validate_welch(const WelchParams& p, std::size_t n) {
    require(p.segment_length >= 2, ErrorCode::InvalidArgument, "segment_length must be >= 2");
    require(p.overlap >= 0.0 && p.overlap < 1.0, ErrorCode::InvalidArgument,
            "overlap must lie in [0, 1)");
    require(p.segment_count(n) >= 2, ErrorCode::DegenerateEstimate,
            "fewer than 2 Welch segments fit a sequence of length " + std::to_string(n) +
                " (a single periodogram has coherence identically 1)");
}

inline std::vector<double> window_taper(const WelchParams& p) {
    std::vector<double> w(p.segment_length, 1.0);
    if (p.window == Window::hann) {
        // periodic Hann
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                        static_cast<double>(w.size()));
    }
    return w;
}

}  // namespace detail

inline WelchSpectra welch_spectra(std::span<const double> x, const WelchParams& params) {
    detail::validate_welch(params, x.size());
    const auto taper = detail::window_taper(params);
    const std::size_t count = params.segment_count(x.size());
    const std::size_t bins = params.bin_count();

    WelchSpectra out;
    out.params = params;
    out.length = x.size();
    out.mean_power.assign(bins, 0.0);
    out.segments.reserve(count);
    std::vector<double> buf(params.segment_length);
    for (std::size_t s = 0; s < count; ++s) {
        const std::size_t start = s * params.hop();
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = x[start + i] * taper[i];
        auto spec = fft(std::span<const double>(buf));
        spec.coefficients.resize(bins);
        for (std::size_t b = 0; b < bins; ++b) out.mean_power[b] += std::norm(spec.coefficients[b]);
        out.segments.push_back(std::move(spec.coefficients));
    }
    for (auto& p : out.mean_power) p /= static_cast<double>(count);
    return out;
}

/// Magnitude-squared coherence |<Pxy>|^2 / (<Pxx> <Pyy>) from precomputed
/// segment spectra. Bins where either averaged power vanishes score 0.
inline CoherenceEstimate coherence(const WelchSpectra& x, const WelchSpectra& y) {
    detail::require(x.length == y.length && x.segments.size() == y.segments.size() &&
                        x.mean_power.size() == y.mean_power.size(),
                    ErrorCode::LengthMismatch, "coherence of sequences with different lengths");
    const std::size_t bins = x.mean_power.size();
    // powers below this fraction of the strongest bin are rounding residue
    constexpr double kRelativeFloor = 1e-20;
    const double x_floor = kRelativeFloor * *std::max_element(x.mean_power.begin(), x.mean_power.end());
    const double y_floor = kRelativeFloor * *std::max_element(y.mean_power.begin(), y.mean_power.end());

    CoherenceEstimate est{std::vector<double>(bins, 0.0), x.params};
    const double inv_count = 1.0 / static_cast<double>(x.segments.size());
    for (std::size_t b = 0; b < bins; ++b) {
        const double pxx = x.mean_power[b];
        const double pyy = y.mean_power[b];
        if (pxx <= x_floor || pyy <= y_floor) continue;
        Complex pxy{};
        for (std::size_t s = 0; s < x.segments.size(); ++s)
            pxy += y.segments[s][b] * std::conj(x.segments[s][b]);
        pxy *= inv_count;
        est.values[b] = std::clamp(std::norm(pxy) / (pxx * pyy), 0.0, 1.0);
    }
    return est;
}

inline CoherenceEstimate coherence(std::span<const double> x, std::span<const double> y,
                                   const WelchParams& params) {
    detail::require(x.size() == y.size(), ErrorCode::LengthMismatch,
                    "coherence of sequences with different lengths");
    return coherence(welch_spectra(x, params), welch_spectra(y, params));
}

/// Mean coherence over all one-sided bins.
inline double cohr_sim(const CoherenceEstimate& c) {
    double sum = 0.0;
    for (double v : c.values) sum += v;
    return sum / static_cast<double>(c.values.size());
}

inline double cohr_sim(std::span<const double> x, std::span<const double> y,
                       const WelchParams& params) {
    return cohr_sim(coherence(x, y, params));
}

/// Debug dump: one row per bin with real, imaginary, and magnitude-squared parts.
inline void write_spectrum_csv(const Spectrum& spectrum, const std::string& path) {
    std::ofstream out(path);
    detail::require(out.good(), ErrorCode::IoFailure, "cannot write " + path);
    out.precision(17);
    out << "bin,real,imag,magnitude2\n";
    for (std::size_t k = 0; k < spectrum.coefficients.size(); ++k) {
        const auto& c = spectrum.coefficients[k];
        out << k << ',' << c.real() << ',' << c.imag() << ',' << std::norm(c) << '\n';
    }
}

}  // namespace cohrcf
