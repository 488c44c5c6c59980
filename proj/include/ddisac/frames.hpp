#pragma once

/**
 * Frame geometry, symbol grids and the discrete transforms that connect the
 * delay-Doppler (DD), time-frequency (TF) and time domains.
 *
 * Conventions used throughout the library:
 *   DDGrid  x[l, k]   l in [0, M) delay bin, k in [0, N) Doppler bin
 *   TFGrid  X[n, m]   n in [0, N) slot,      m in [0, M) subcarrier
 *
 *   isfft:  X[n,m] = 1/sqrt(NM) sum_{k,l} x[l,k] exp(j2pi(nk/N - ml/M))
 *   idzt:   s[l + nM] = 1/sqrt(N) sum_k x[l,k] exp(j2pi nk/N)
 *
 * All four transforms are unitary; their inverses use the conjugate kernels.
 */

#include "ddisac/error.hpp"
#include "ddisac/fft.hpp"
#include "ddisac/matrix.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddisac {

/// M x N frame with slot duration T. B = M/T, T_f = N*T.
class FrameParams {
public:
    FrameParams(std::size_t num_delay_bins, std::size_t num_doppler_bins, double slot_duration = 1.0)
        : m_(num_delay_bins), n_(num_doppler_bins), t_(slot_duration) {
        if (m_ < 1 || n_ < 1) throw std::invalid_argument("FrameParams: M and N must be >= 1");
        if (!(t_ > 0.0) || !std::isfinite(t_)) throw std::invalid_argument("FrameParams: T must be > 0");
    }

    std::size_t num_delay_bins() const noexcept { return m_; }
    std::size_t num_doppler_bins() const noexcept { return n_; }
    double slot_duration() const noexcept { return t_; }

    double bandwidth() const noexcept { return static_cast<double>(m_) / t_; }
    double frame_duration() const noexcept { return static_cast<double>(n_) * t_; }
    double delay_resolution() const noexcept { return t_ / static_cast<double>(m_); }
    double doppler_resolution() const noexcept { return 1.0 / (static_cast<double>(n_) * t_); }
    std::size_t size() const noexcept { return m_ * n_; }

    bool operator==(const FrameParams&) const = default;

private:
    std::size_t m_;
    std::size_t n_;
    double t_;
};

inline double energy(std::span<const cplx> v) {
    return std::accumulate(v.begin(), v.end(), 0.0, [](double acc, const cplx& c) { return acc + std::norm(c); });
}

/// Symbols on the DD grid, indexed (delay, Doppler).
struct DDGrid {
    FrameParams params;
    Matrix<cplx> symbols;

    explicit DDGrid(const FrameParams& p)
        : params(p), symbols(p.num_delay_bins(), p.num_doppler_bins()) {}
    DDGrid(const FrameParams& p, Matrix<cplx> s) : params(p), symbols(std::move(s)) {
        if (symbols.rows() != p.num_delay_bins() || symbols.cols() != p.num_doppler_bins())
            throw LengthMismatch("DDGrid: symbol matrix must be M x N");
    }

    cplx& operator()(std::size_t l, std::size_t k) { return symbols(l, k); }
    const cplx& operator()(std::size_t l, std::size_t k) const { return symbols(l, k); }
    double energy() const { return ddisac::energy(symbols.data()); }
};

/// Symbols on the TF grid, indexed (slot, subcarrier).
struct TFGrid {
    FrameParams params;
    Matrix<cplx> symbols;

    explicit TFGrid(const FrameParams& p)
        : params(p), symbols(p.num_doppler_bins(), p.num_delay_bins()) {}
    TFGrid(const FrameParams& p, Matrix<cplx> s) : params(p), symbols(std::move(s)) {
        if (symbols.rows() != p.num_doppler_bins() || symbols.cols() != p.num_delay_bins())
            throw LengthMismatch("TFGrid: symbol matrix must be N x M");
    }

    cplx& operator()(std::size_t n, std::size_t m) { return symbols(n, m); }
    const cplx& operator()(std::size_t n, std::size_t m) const { return symbols(n, m); }
    double energy() const { return ddisac::energy(symbols.data()); }
};

/// Complex baseband samples at rate Q*B.
struct TimeSignal {
    std::vector<cplx> samples;
    FrameParams frame;
    std::size_t oversampling = 1;

    TimeSignal(std::vector<cplx> s, const FrameParams& f, std::size_t q = 1)
        : samples(std::move(s)), frame(f), oversampling(q) {
        if (oversampling < 1) throw std::invalid_argument("TimeSignal: oversampling must be >= 1");
    }

    double sample_rate() const noexcept { return static_cast<double>(oversampling) * frame.bandwidth(); }
    double sample_period() const noexcept { return 1.0 / sample_rate(); }
    std::size_t size() const noexcept { return samples.size(); }
    /// Samples spanned by one frame duration at this rate.
    std::size_t frame_samples() const noexcept { return oversampling * frame.size(); }
    double energy() const { return ddisac::energy(samples); }
};

/// DD -> TF.
inline TFGrid isfft(const DDGrid& x) {
    const auto m = x.params.num_delay_bins();
    const auto n = x.params.num_doppler_bins();
    // Inverse DFT along Doppler for every delay row, then forward DFT along delay per slot.
    Matrix<cplx> a = x.symbols;
    for (std::size_t l = 0; l < m; ++l) fft::inverse(a.row(l));

    TFGrid out(x.params);
    std::vector<cplx> col(m);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m * n));
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t l = 0; l < m; ++l) col[l] = a(l, s);
        fft::forward(col);
        for (std::size_t sc = 0; sc < m; ++sc) out(s, sc) = col[sc] * scale;
    }
    return out;
}

/// TF -> DD; exact inverse of isfft.
inline DDGrid sfft(const TFGrid& X) {
    const auto m = X.params.num_delay_bins();
    const auto n = X.params.num_doppler_bins();
    Matrix<cplx> b = X.symbols;
    for (std::size_t s = 0; s < n; ++s) fft::inverse(b.row(s));

    DDGrid out(X.params);
    std::vector<cplx> col(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m * n));
    for (std::size_t l = 0; l < m; ++l) {
        for (std::size_t s = 0; s < n; ++s) col[s] = b(s, l);
        fft::forward(col);
        for (std::size_t k = 0; k < n; ++k) out(l, k) = col[k] * scale;
    }
    return out;
}

/// Inverse discrete Zak transform: N-point IDFT per delay bin followed by the
/// symbol-wise interleave s[l + nM]. Critically sampled (Q = 1).
inline TimeSignal idzt(const DDGrid& x) {
    const auto m = x.params.num_delay_bins();
    const auto n = x.params.num_doppler_bins();
    std::vector<cplx> s(m * n);
    std::vector<cplx> row(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t l = 0; l < m; ++l) {
        auto src = x.symbols.row(l);
        std::copy(src.begin(), src.end(), row.begin());
        fft::inverse(row);
        for (std::size_t t = 0; t < n; ++t) s[l + t * m] = row[t] * scale;
    }
    return TimeSignal(std::move(s), x.params, 1);
}

/// Discrete Zak transform of a critically sampled frame of exactly M*N samples.
inline DDGrid dzt(const TimeSignal& s) {
    const auto m = s.frame.num_delay_bins();
    const auto n = s.frame.num_doppler_bins();
    if (s.oversampling != 1) throw LengthMismatch("dzt: signal must be critically sampled (Q = 1)");
    if (s.size() != m * n)
        throw LengthMismatch("dzt: expected " + std::to_string(m * n) + " samples, got " + std::to_string(s.size()));
    DDGrid out(s.frame);
    std::vector<cplx> row(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t l = 0; l < m; ++l) {
        for (std::size_t t = 0; t < n; ++t) row[t] = s.samples[l + t * m];
        fft::forward(row);
        for (std::size_t k = 0; k < n; ++k) out(l, k) = row[k] * scale;
    }
    return out;
}

/// Per-slot M-point unitary IDFT, concatenated over N slots (rectangular
/// Heisenberg transform, no cyclic prefix).
inline TimeSignal slot_idft(const TFGrid& X) {
    const auto m = X.params.num_delay_bins();
    const auto n = X.params.num_doppler_bins();
    std::vector<cplx> s(m * n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (std::size_t t = 0; t < n; ++t) {
        std::span<cplx> slot(s.data() + t * m, m);
        auto src = X.symbols.row(t);
        std::copy(src.begin(), src.end(), slot.begin());
        fft::inverse(slot);
        for (auto& v : slot) v *= scale;
    }
    return TimeSignal(std::move(s), X.params, 1);
}

/// Per-slot M-point unitary DFT of the first M*N critically sampled samples.
inline TFGrid slot_dft(const TimeSignal& s) {
    const auto m = s.frame.num_delay_bins();
    const auto n = s.frame.num_doppler_bins();
    if (s.oversampling != 1) throw LengthMismatch("slot_dft: signal must be critically sampled (Q = 1)");
    if (s.size() < m * n) throw LengthMismatch("slot_dft: signal shorter than one frame");
    TFGrid out(s.frame);
    std::vector<cplx> slot(m);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (std::size_t t = 0; t < n; ++t) {
        std::copy_n(s.samples.begin() + static_cast<std::ptrdiff_t>(t * m), m, slot.begin());
        fft::forward(slot);
        for (std::size_t sc = 0; sc < m; ++sc) out(t, sc) = slot[sc] * scale;
    }
    return out;
}

}  // namespace ddisac
