#pragma once

/**
 * Pulse shaping and the transmit chains: Zak-path OTFS, SFFT-path OTFS and
 * the OFDM baseline, plus seeded symbol sources.
 *
 * Every chain produces a critically sampled "chip" sequence which is then
 * upsampled by Q and linearly convolved with the transmit pulse. For a chip
 * sequence of length n and a pulse of L taps the shaped output has
 * (n - 1) * Q + L samples; chip i is centred at sample i * Q + (L - 1) / 2.
 */

#include "ddisac/error.hpp"
#include "ddisac/frames.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddisac {

enum class PulseKind { rectangular, rrc };

/// Root-raised-cosine taps sampled at Q samples per symbol over `span` symbol
/// periods (span * Q + 1 taps), normalized to unit energy.
inline std::vector<double> rrc_taps(double rolloff, int span, int oversampling) {
    if (!(rolloff >= 0.0 && rolloff <= 1.0)) throw InvalidRolloff("rrc_taps: roll-off must lie in [0, 1]");
    if (span < 2) throw std::invalid_argument("rrc_taps: span must be >= 2");
    if (oversampling < 1) throw std::invalid_argument("rrc_taps: oversampling must be >= 1");

    const double pi = std::numbers::pi;
    const double b = rolloff;
    const int len = span * oversampling + 1;
    const double half = span * oversampling / 2.0;
    std::vector<double> h(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) {
        const double t = (i - half) / oversampling;
        double v;
        if (std::abs(t) < 1e-12) {
            v = 1.0 - b + 4.0 * b / pi;
        } else if (b > 0.0 && std::abs(std::abs(4.0 * b * t) - 1.0) < 1e-12) {
            // analytic limit at t = +-1/(4 beta)
            v = b / std::sqrt(2.0) *
                ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * b)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * b)));
        } else {
            v = (std::sin(pi * t * (1.0 - b)) + 4.0 * b * t * std::cos(pi * t * (1.0 + b))) /
                (pi * t * (1.0 - (4.0 * b * t) * (4.0 * b * t)));
        }
        h[static_cast<std::size_t>(i)] = v;
    }
    double e = 0.0;
    for (double v : h) e += v * v;
    const double s = 1.0 / std::sqrt(e);
    for (double& v : h) v *= s;
    return h;
}

struct PulseSpec {
    PulseKind kind = PulseKind::rrc;
    double rolloff = 0.3;
    int span = 64;
    int oversampling = 4;

    static PulseSpec rectangular(int q = 1) { return {PulseKind::rectangular, 0.0, 2, q}; }
    static PulseSpec rrc(double beta = 0.3, int span = 64, int q = 4) { return {PulseKind::rrc, beta, span, q}; }

    std::size_t q() const { return static_cast<std::size_t>(oversampling); }

    /// Unit-energy, symmetric transmit taps (the receive filter is identical).
    std::vector<double> taps() const {
        if (oversampling < 1) throw std::invalid_argument("PulseSpec: oversampling must be >= 1");
        if (kind == PulseKind::rrc) return rrc_taps(rolloff, span, oversampling);
        return std::vector<double>(q(), 1.0 / std::sqrt(static_cast<double>(oversampling)));
    }

    bool operator==(const PulseSpec&) const = default;
};

/// Upsample a critically sampled chip sequence by Q and convolve with the pulse.
inline TimeSignal shape(const TimeSignal& chips, const PulseSpec& pulse) {
    if (chips.oversampling != 1) throw std::invalid_argument("shape: input must be critically sampled");
    const auto taps = pulse.taps();
    const auto q = pulse.q();
    const auto n = chips.size();
    if (n == 0) return TimeSignal({}, chips.frame, q);
    std::vector<cplx> out((n - 1) * q + taps.size());
    for (std::size_t i = 0; i < n; ++i) {
        const cplx c = chips.samples[i];
        if (c == cplx{}) continue;
        cplx* dst = out.data() + i * q;
        for (std::size_t t = 0; t < taps.size(); ++t) dst[t] += c * taps[t];
    }
    return TimeSignal(std::move(out), chips.frame, q);
}

inline TimeSignal modulate_otfs_zak(const DDGrid& x, const PulseSpec& pulse) { return shape(idzt(x), pulse); }

inline TimeSignal modulate_otfs_sfft(const DDGrid& x, const PulseSpec& pulse) {
    return shape(slot_idft(isfft(x)), pulse);
}

/// OFDM baseline (DMT structure, no cyclic prefix).
inline TimeSignal modulate_ofdm(const TFGrid& X, const PulseSpec& pulse) { return shape(slot_idft(X), pulse); }

/// Receive filter matched to `pulse`, total group delay removed, downsampled to
/// the chip rate. Output sample i corresponds to chip i; the output runs until
/// the last received sample, so echoes beyond the frame are kept.
inline TimeSignal matched_filter_rx(const TimeSignal& r, const PulseSpec& pulse) {
    const auto q = pulse.q();
    if (r.oversampling != q) throw std::invalid_argument("matched_filter_rx: oversampling differs from pulse");
    const auto min_len = r.frame.size() * q;
    if (r.size() < min_len)
        throw LengthMismatch("matched_filter_rx: received " + std::to_string(r.size()) + " samples, need at least " +
                             std::to_string(min_len));
    const auto taps = pulse.taps();
    const auto len = r.size();
    const auto n_out = (len - 1) / q + 1;
    std::vector<cplx> y(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
        const std::size_t base = i * q;
        const std::size_t stop = std::min(taps.size(), len - base);
        cplx acc{};
        for (std::size_t t = 0; t < stop; ++t) acc += r.samples[base + t] * taps[t];
        y[i] = acc;
    }
    return TimeSignal(std::move(y), r.frame, 1);
}

/// Seeded symbol source. Generation is a pure function of (kind, seed, params);
/// per-trial sources are made with `with_seed`.
struct SymbolSource {
    enum class Kind { qpsk_random, single_impulse, fixed };

    Kind kind = Kind::qpsk_random;
    std::uint64_t seed = 0;
    std::size_t impulse_delay = 0;
    std::size_t impulse_doppler = 0;
    std::optional<Matrix<cplx>> grid;

    static SymbolSource qpsk(std::uint64_t seed) { return {Kind::qpsk_random, seed, 0, 0, std::nullopt}; }
    static SymbolSource impulse(std::size_t l0 = 0, std::size_t k0 = 0) {
        return {Kind::single_impulse, 0, l0, k0, std::nullopt};
    }
    static SymbolSource fixed(Matrix<cplx> g) { return {Kind::fixed, 0, 0, 0, std::move(g)}; }

    SymbolSource with_seed(std::uint64_t s) const {
        auto copy = *this;
        copy.seed = s;
        return copy;
    }

    /// Symbols arranged as a DD grid (M x N), total energy M * N.
    DDGrid dd_grid(const FrameParams& p) const {
        DDGrid g(p);
        if (kind == Kind::single_impulse) {
            if (impulse_delay >= p.num_delay_bins() || impulse_doppler >= p.num_doppler_bins())
                throw std::invalid_argument("SymbolSource: impulse position outside the grid");
            g(impulse_delay, impulse_doppler) = std::sqrt(static_cast<double>(p.size()));
            return g;
        }
        fill(g.symbols, p);
        return g;
    }

    /// Symbols arranged as a TF grid (N x M), total energy M * N.
    TFGrid tf_grid(const FrameParams& p) const {
        TFGrid g(p);
        if (kind == Kind::single_impulse) {
            if (impulse_delay >= p.num_delay_bins() || impulse_doppler >= p.num_doppler_bins())
                throw std::invalid_argument("SymbolSource: impulse position outside the grid");
            g(impulse_doppler, impulse_delay) = std::sqrt(static_cast<double>(p.size()));
            return g;
        }
        fill(g.symbols, p);
        return g;
    }

private:
    void fill(Matrix<cplx>& m, const FrameParams& p) const {
        if (kind == Kind::qpsk_random) {
            std::mt19937_64 gen(seed);
            const double a = 1.0 / std::sqrt(2.0);
            std::uint64_t bits = 0;
            int left = 0;
            for (auto& v : m.data()) {
                if (left == 0) {
                    bits = gen();
                    left = 32;
                }
                v = cplx((bits & 1U) ? -a : a, (bits & 2U) ? -a : a);
                bits >>= 2;
                --left;
            }
            return;
        }
        const auto& src = grid.value();
        if (src.size() != m.size()) throw LengthMismatch("SymbolSource: fixed grid has the wrong size");
        std::copy(src.data().begin(), src.data().end(), m.data().begin());
        const double e = energy(m.data());
        if (e > 0.0) {
            const double s = std::sqrt(static_cast<double>(p.size()) / e);
            for (auto& v : m.data()) v *= s;
        }
    }
};

enum class Waveform { dd, tf };

inline const char* to_string(Waveform w) { return w == Waveform::dd ? "dd" : "tf"; }

/// A transmitted frame: the shaped signal plus the chip-rate reference the
/// radar receiver correlates against. Both carry the same energy scaling.
struct Transmission {
    Waveform waveform;
    TimeSignal shaped;
    TimeSignal reference;
    PulseSpec pulse;
};

namespace detail {
inline Transmission finish(Waveform w, TimeSignal chips, const PulseSpec& pulse, double frame_energy) {
    auto shaped = shape(chips, pulse);
    const double e = shaped.energy();
    if (e > 0.0) {
        const double s = std::sqrt(frame_energy / e);
        for (auto& v : shaped.samples) v *= s;
        for (auto& v : chips.samples) v *= s;
    }
    return {w, std::move(shaped), std::move(chips), pulse};
}
}  // namespace detail

/// DD waveform through the Zak path with the transmitted frame energy set to M * N.
inline Transmission transmit(const DDGrid& x, const PulseSpec& pulse) {
    return detail::finish(Waveform::dd, idzt(x), pulse, static_cast<double>(x.params.size()));
}

/// TF (OFDM) waveform with the transmitted frame energy set to M * N.
inline Transmission transmit(const TFGrid& X, const PulseSpec& pulse) {
    return detail::finish(Waveform::tf, slot_idft(X), pulse, static_cast<double>(X.params.size()));
}

inline Transmission transmit(Waveform w, const SymbolSource& src, const FrameParams& p, const PulseSpec& pulse) {
    return w == Waveform::dd ? transmit(src.dd_grid(p), pulse) : transmit(src.tf_grid(p), pulse);
}

}  // namespace ddisac
