#pragma once

/**
 * Point-scatterer delay-Doppler channel and calibrated complex AWGN.
 *
 * A target (h, tau, nu) maps s(t) to h * s(t - tau) * exp(j2pi nu (t - tau)).
 * Integer-sample delays are exact index shifts; fractional delays use a
 * frequency-domain phase ramp on a zero-padded buffer, which is exact for
 * band-limited (pulse-shaped) signals.
 */

#include "ddisac/error.hpp"
#include "ddisac/fft.hpp"
#include "ddisac/frames.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace ddisac {

struct PointTarget {
    cplx gain{1.0, 0.0};
    double delay = 0.0;    // seconds
    double doppler = 0.0;  // Hz
};

struct ChannelRealization {
    std::vector<PointTarget> targets;
    double noise_variance = 0.0;
};

/// out[i] = s(i - shift) for i in [0, out_len), s band-limited and zero outside
/// its support. With `circular` the sequence is treated as one period and
/// out_len must equal s.size().
inline std::vector<cplx> fractional_shift(std::span<const cplx> s, double shift, std::size_t out_len,
                                          bool circular = false) {
    const auto n = s.size();
    std::vector<cplx> out(out_len);
    if (n == 0 || out_len == 0) return out;
    if (circular && out_len != n) throw LengthMismatch("fractional_shift: circular shift needs out_len == size");

    const double rounded = std::round(shift);
    if (std::abs(shift - rounded) < 1e-9) {
        const auto d = static_cast<long long>(rounded);
        const auto nn = static_cast<long long>(n);
        for (std::size_t i = 0; i < out_len; ++i) {
            long long j = static_cast<long long>(i) - d;
            if (circular) {
                j %= nn;
                if (j < 0) j += nn;
            } else if (j < 0 || j >= nn) {
                continue;
            }
            out[i] = s[static_cast<std::size_t>(j)];
        }
        return out;
    }

    std::size_t p = n;
    if (!circular) {
        const auto reach = static_cast<std::size_t>(std::ceil(std::abs(shift)));
        p = fft::next_pow2(2 * (std::max(out_len, n) + reach));
    }
    std::vector<cplx> buf(p);
    std::copy(s.begin(), s.end(), buf.begin());
    fft::forward(buf);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t b = 0; b < p; ++b) {
        if (p % 2 == 0 && b == p / 2) {
            buf[b] *= std::cos(std::numbers::pi * shift);
            continue;
        }
        const double f = b < p / 2 + 1 ? static_cast<double>(b) / static_cast<double>(p)
                                       : (static_cast<double>(b) - static_cast<double>(p)) / static_cast<double>(p);
        buf[b] *= std::polar(1.0, -two_pi * f * shift);
    }
    fft::inverse(buf);
    const double inv = 1.0 / static_cast<double>(p);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = buf[i] * inv;
    return out;
}

inline void validate_target(const PointTarget& t, const FrameParams& f) {
    if (!(t.delay >= 0.0) || !(t.delay < f.slot_duration()))
        throw DelayOutOfRange("target delay must lie in [0, T)");
    if (!(std::abs(t.doppler) < 0.5 / f.slot_duration()))
        throw DopplerOutOfRange("target Doppler must satisfy |nu| < 1/(2T)");
}

namespace detail {
/// Superposition of delayed, Doppler-shifted copies without range checks.
inline TimeSignal superpose(const TimeSignal& s, const std::vector<PointTarget>& targets) {
    const auto& f = s.frame;
    const std::size_t out_len = s.size() + f.num_delay_bins() * s.oversampling;
    std::vector<cplx> r(out_len);
    const double fs = s.sample_rate();
    const double ts = 1.0 / fs;
    const double two_pi = 2.0 * std::numbers::pi;
    for (const auto& t : targets) {
        const auto shifted = fractional_shift(s.samples, t.delay * fs, out_len);
        for (std::size_t i = 0; i < out_len; ++i) {
            if (shifted[i] == cplx{}) continue;
            const double ph = two_pi * t.doppler * (static_cast<double>(i) * ts - t.delay);
            r[i] += t.gain * shifted[i] * std::polar(1.0, ph);
        }
    }
    return TimeSignal(std::move(r), f, s.oversampling);
}
}  // namespace detail

/// Received signal for the given scatterers (noise-free). The output is
/// extended by one slot (M * Q samples) so every echo with tau < T fits.
inline TimeSignal apply_channel(const TimeSignal& s, const ChannelRealization& ch) {
    for (const auto& t : ch.targets) validate_target(t, s.frame);
    return detail::superpose(s, ch.targets);
}

/// Adds circularly symmetric complex Gaussian noise of the given variance.
inline TimeSignal add_noise(const TimeSignal& s, double variance, std::uint64_t seed) {
    if (variance < 0.0) throw std::invalid_argument("add_noise: variance must be >= 0");
    TimeSignal out = s;
    if (variance == 0.0) return out;
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
    for (auto& v : out.samples) {
        const double re = nd(gen);
        const double im = nd(gen);
        v += cplx(re, im);
    }
    return out;
}

/// Mean signal power per sample over one frame duration (Q * M * N samples).
inline double frame_power(const TimeSignal& s) {
    return s.energy() / static_cast<double>(s.frame_samples());
}

/// AWGN at the requested per-sample SNR; snr_db = +inf returns the input.
inline TimeSignal add_awgn(const TimeSignal& s, double snr_db, std::uint64_t seed) {
    if (std::isinf(snr_db) && snr_db > 0) return s;
    const double p = frame_power(s);
    if (!(p > 0.0)) throw std::invalid_argument("add_awgn: signal has no energy");
    return add_noise(s, p / std::pow(10.0, snr_db / 10.0), seed);
}

/// Channel followed by noise at the realization's variance.
inline TimeSignal receive(const TimeSignal& s, const ChannelRealization& ch, std::uint64_t seed) {
    return add_noise(apply_channel(s, ch), ch.noise_variance, seed);
}

}  // namespace ddisac
