#pragma once

/**
 * Cross/auto ambiguity functions and their zero-delay / zero-Doppler cuts.
 *
 * Convention (matches the matched-filter receiver):
 *   A(tau, nu) = sum_i s1[i] * conj(s2(i*Ts - tau)) * exp(-j2pi nu i Ts)
 * Delays are given in units of the slot duration T, Dopplers in units of 1/T.
 */

#include "ddisac/channel.hpp"
#include "ddisac/error.hpp"
#include "ddisac/frames.hpp"
#include "ddisac/parallel.hpp"
#include "ddisac/waveforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace ddisac {

struct AmbiguitySurface {
    std::vector<double> delay_axis;    // units of T
    std::vector<double> doppler_axis;  // units of 1/T
    Matrix<cplx> values;               // (delay index, Doppler index)
    double peak_magnitude = 0.0;

    double magnitude_db(std::size_t d, std::size_t v) const {
        return 20.0 * std::log10(std::abs(values(d, v)) / peak_magnitude);
    }
};

struct AmbiguityOptions {
    /// Treat both signals as one period (circular delay shifts).
    bool circular = false;
    unsigned workers = 1;
};

namespace detail {
inline void check_axis(const std::vector<double>& axis, const char* name) {
    if (axis.empty()) throw std::invalid_argument(std::string(name) + " axis is empty");
    for (std::size_t i = 1; i < axis.size(); ++i)
        if (!(axis[i] > axis[i - 1])) throw std::invalid_argument(std::string(name) + " axis must be strictly increasing");
}
}  // namespace detail

inline AmbiguitySurface cross_ambiguity(const TimeSignal& s1, const TimeSignal& s2, std::vector<double> delay_axis,
                                        std::vector<double> doppler_axis, const AmbiguityOptions& opt = {}) {
    if (s1.oversampling != s2.oversampling || !(s1.frame == s2.frame))
        throw std::invalid_argument("cross_ambiguity: signals must share frame and sample rate");
    detail::check_axis(delay_axis, "delay");
    detail::check_axis(doppler_axis, "Doppler");
    const auto& f = s1.frame;
    const double samples_per_slot = static_cast<double>(s1.oversampling * f.num_delay_bins());
    const double max_delay = static_cast<double>(f.num_doppler_bins());  // one frame, in units of T
    const double max_doppler = samples_per_slot / 2.0;                    // fs / 2, in units of 1/T
    if (std::abs(delay_axis.front()) > max_delay || std::abs(delay_axis.back()) > max_delay)
        throw AxisOutOfRange("cross_ambiguity: delay axis exceeds the frame length");
    if (std::abs(doppler_axis.front()) > max_doppler || std::abs(doppler_axis.back()) > max_doppler)
        throw AxisOutOfRange("cross_ambiguity: Doppler axis exceeds half the sample rate");
    if (opt.circular && s1.size() != s2.size())
        throw LengthMismatch("cross_ambiguity: circular mode needs equal lengths");

    const auto len = s1.size();
    AmbiguitySurface out{std::move(delay_axis), std::move(doppler_axis), {}, 0.0};
    out.values = Matrix<cplx>(out.delay_axis.size(), out.doppler_axis.size());
    const double two_pi = 2.0 * std::numbers::pi;

    parallel_for(out.delay_axis.size(), opt.workers, [&](std::size_t d) {
        const auto shifted = fractional_shift(s2.samples, out.delay_axis[d] * samples_per_slot, len, opt.circular);
        std::vector<cplx> prod(len);
        for (std::size_t i = 0; i < len; ++i) prod[i] = s1.samples[i] * std::conj(shifted[i]);
        for (std::size_t v = 0; v < out.doppler_axis.size(); ++v) {
            const double cycles = out.doppler_axis[v] / samples_per_slot;  // cycles per sample
            cplx acc{};
            if (cycles == 0.0) {
                for (const auto& p : prod) acc += p;
            } else {
                for (std::size_t i = 0; i < len; ++i) acc += prod[i] * std::polar(1.0, -two_pi * cycles * static_cast<double>(i));
            }
            out.values(d, v) = acc;
        }
    });
    for (const auto& v : out.values.data()) out.peak_magnitude = std::max(out.peak_magnitude, std::abs(v));
    return out;
}

inline AmbiguitySurface auto_ambiguity(const TimeSignal& s, std::vector<double> delay_axis,
                                       std::vector<double> doppler_axis, const AmbiguityOptions& opt = {}) {
    return cross_ambiguity(s, s, std::move(delay_axis), std::move(doppler_axis), opt);
}

/// One-dimensional slice in dB, normalized so its maximum is 0 dB and clamped at `floor_db`.
struct AmbiguityCut {
    std::vector<double> axis;
    std::vector<double> magnitude_db;
};

namespace detail {
inline std::size_t origin_index(const std::vector<double>& axis, const char* what) {
    for (std::size_t i = 0; i < axis.size(); ++i)
        if (std::abs(axis[i]) < 1e-12) return i;
    throw MissingOrigin(std::string(what) + " axis does not contain 0");
}

inline AmbiguityCut to_cut(std::vector<double> axis, const std::vector<double>& mags, double floor_db) {
    const double peak = *std::max_element(mags.begin(), mags.end());
    AmbiguityCut cut{std::move(axis), {}};
    cut.magnitude_db.reserve(mags.size());
    for (double m : mags) {
        const double db = peak > 0.0 && m > 0.0 ? 20.0 * std::log10(m / peak) : floor_db;
        cut.magnitude_db.push_back(std::max(db, floor_db));
    }
    return cut;
}
}  // namespace detail

inline AmbiguityCut zero_doppler_cut(const AmbiguitySurface& s, double floor_db = -80.0) {
    const auto v0 = detail::origin_index(s.doppler_axis, "Doppler");
    std::vector<double> mags(s.delay_axis.size());
    for (std::size_t d = 0; d < mags.size(); ++d) mags[d] = std::abs(s.values(d, v0));
    return detail::to_cut(s.delay_axis, mags, floor_db);
}

inline AmbiguityCut zero_delay_cut(const AmbiguitySurface& s, double floor_db = -80.0) {
    const auto d0 = detail::origin_index(s.delay_axis, "delay");
    std::vector<double> mags(s.doppler_axis.size());
    for (std::size_t v = 0; v < mags.size(); ++v) mags[v] = std::abs(s.values(d0, v));
    return detail::to_cut(s.doppler_axis, mags, floor_db);
}

/// Symmetric axis from -extent to +extent in `steps_per_unit` steps per unit (always contains 0).
inline std::vector<double> symmetric_axis(double extent, std::size_t steps_per_unit) {
    const auto half = static_cast<long long>(std::llround(extent * static_cast<double>(steps_per_unit)));
    std::vector<double> axis;
    axis.reserve(static_cast<std::size_t>(2 * half + 1));
    for (long long i = -half; i <= half; ++i) axis.push_back(static_cast<double>(i) / static_cast<double>(steps_per_unit));
    return axis;
}

// ---------------------------------------------------------------------------
// DD basis-function ambiguity identity
// ---------------------------------------------------------------------------

enum class TimeWindow {
    periodic,     // observe one period; ambiguities are circular
    rectangular,  // observe one frame; ambiguities treat the outside as zero
};

struct Eq1Options {
    PulseSpec pulse = PulseSpec::rrc();
    TimeWindow window = TimeWindow::rectangular;
};

/// Samples [0, Q*M*N) of the DD basis function for bin (l, k): the unbounded
/// pulse train sum_n g(t - nT) / sqrt(N) (one pulse per slot, pulse centred on
/// the slot start), delayed by l/B and rotated by exp(j2pi k/T_f (t - l/B)).
inline TimeSignal dd_basis_function(std::size_t l, std::size_t k, const FrameParams& p, const PulseSpec& pulse) {
    const auto q = pulse.q();
    const auto slot = static_cast<long long>(p.num_delay_bins() * q);
    const auto len = static_cast<long long>(p.size() * q);
    const auto taps = pulse.taps();
    const auto half = static_cast<long long>(taps.size() - 1) / 2;
    const auto shift = static_cast<long long>(l * q);
    const double amp = 1.0 / std::sqrt(static_cast<double>(p.num_doppler_bins()));
    const double cycles = static_cast<double>(k) / static_cast<double>(len);
    const double two_pi = 2.0 * std::numbers::pi;

    std::vector<cplx> out(static_cast<std::size_t>(len));
    // Pulses whose support reaches the window after the delay.
    const long long n_lo = (-shift - half - slot) / slot - 1;
    const long long n_hi = (len - shift + half) / slot + 1;
    for (long long n = n_lo; n <= n_hi; ++n) {
        const long long centre = n * slot + shift;
        for (long long t = 0; t < static_cast<long long>(taps.size()); ++t) {
            const long long j = centre - half + t;
            if (j < 0 || j >= len) continue;
            out[static_cast<std::size_t>(j)] += amp * taps[static_cast<std::size_t>(t)];
        }
    }
    for (long long j = 0; j < len; ++j)
        out[static_cast<std::size_t>(j)] *= std::polar(1.0, two_pi * cycles * static_cast<double>(j - shift));
    return TimeSignal(std::move(out), p, q);
}

/**
 * Residual of the basis-function ambiguity identity
 *
 *   <Phi_{t2,v2}, Phi_{t1,v1}> = exp(j2pi v1 (t1 - t2)) A_Phi(t1 - t2, v1 - v2),
 *
 * with A_Phi the auto-ambiguity of the (0, 0) basis function observed through
 * the window, delays in samples and Dopplers in cycles per sample. Returns
 * |lhs - rhs| / A_Phi(0, 0). The identity is exact for the periodic window;
 * the rectangular window makes it approximate once t1 != t2.
 */
inline double verify_eq1(std::size_t l1, std::size_t k1, std::size_t l2, std::size_t k2, const FrameParams& p,
                         const Eq1Options& opt = {}) {
    const auto m = p.num_delay_bins();
    const auto n = p.num_doppler_bins();
    if (l1 >= m || l2 >= m || k1 >= n || k2 >= n) throw std::invalid_argument("verify_eq1: bin outside the grid");
    const auto q = opt.pulse.q();

    const auto proto = dd_basis_function(0, 0, p, opt.pulse);
    const auto phi1 = dd_basis_function(l1, k1, p, opt.pulse);
    const auto phi2 = dd_basis_function(l2, k2, p, opt.pulse);

    cplx lhs{};
    for (std::size_t j = 0; j < phi1.size(); ++j) lhs += phi2.samples[j] * std::conj(phi1.samples[j]);

    const double d_tau = (static_cast<double>(l1) - static_cast<double>(l2)) / static_cast<double>(m);  // units of T
    const double d_nu = (static_cast<double>(k1) - static_cast<double>(k2)) / static_cast<double>(n);   // units of 1/T
    const AmbiguityOptions aopt{opt.window == TimeWindow::periodic, 1};
    const auto a = auto_ambiguity(proto, {d_tau}, {d_nu}, aopt).values(0, 0);
    const auto a0 = auto_ambiguity(proto, {0.0}, {0.0}, aopt).values(0, 0);

    const double nu1 = static_cast<double>(k1) / static_cast<double>(p.size() * q);
    const double dt = (static_cast<double>(l1) - static_cast<double>(l2)) * static_cast<double>(q);
    const cplx rhs = std::polar(1.0, 2.0 * std::numbers::pi * nu1 * dt) * a;
    return std::abs(lhs - rhs) / std::abs(a0);
}

}  // namespace ddisac
