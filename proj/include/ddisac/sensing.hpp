#pragma once

/**
 * Radar receive chain: range-Doppler map, OS-CFAR, parameter estimation and
 * successive interference cancellation (SIC).
 *
 * All maps are M x N, indexed (delay bin l, Doppler bin k). Doppler bins are
 * reported unsigned in [0, N); estimates use the signed bin k - N for k >= N/2.
 */

#include "ddisac/channel.hpp"
#include "ddisac/error.hpp"
#include "ddisac/fft.hpp"
#include "ddisac/frames.hpp"
#include "ddisac/parallel.hpp"
#include "ddisac/waveforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace ddisac {

struct RangeDopplerMap {
    FrameParams params;
    Matrix<cplx> cells;

    double power(std::size_t l, std::size_t k) const { return std::norm(cells(l, k)); }

    Matrix<double> power() const {
        Matrix<double> p(cells.rows(), cells.cols());
        auto src = cells.data();
        auto dst = p.data();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::norm(src[i]);
        return p;
    }
};

/// Fast-time correlation per delay lag, then a unitary DFT across slots:
///   z_l[n]     = sum_{i<M} rx[i + nM + l] conj(tx[i + nM])
///   cells[l,k] = 1/sqrt(N) sum_n z_l[n] exp(-j2pi nk/N)
/// Samples of rx beyond its end count as zero.
inline RangeDopplerMap range_doppler_map(const TimeSignal& rx, const TimeSignal& tx_ref, unsigned workers = 1) {
    const auto& p = tx_ref.frame;
    const auto m = p.num_delay_bins();
    const auto n = p.num_doppler_bins();
    if (rx.oversampling != 1 || tx_ref.oversampling != 1)
        throw LengthMismatch("range_doppler_map: both signals must be at the chip rate");
    if (!(rx.frame == p)) throw LengthMismatch("range_doppler_map: frame parameters differ");
    if (rx.size() < m * n || tx_ref.size() < m * n)
        throw LengthMismatch("range_doppler_map: signals must hold at least M*N samples");

    RangeDopplerMap map{p, Matrix<cplx>(m, n)};
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    const auto len = rx.size();
    parallel_for(m, workers, [&](std::size_t l) {
        std::vector<cplx> z(n);
        for (std::size_t s = 0; s < n; ++s) {
            cplx acc{};
            const std::size_t base = s * m;
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t j = base + i + l;
                if (j >= len) break;
                acc += rx.samples[j] * std::conj(tx_ref.samples[base + i]);
            }
            z[s] = acc;
        }
        fft::forward(z);
        for (std::size_t k = 0; k < n; ++k) map.cells(l, k) = z[k] * scale;
    });
    return map;
}

/// Likelihood-ratio statistic of one cell for known noise power.
inline double lrt_statistic(const RangeDopplerMap& map, std::size_t l, std::size_t k, double noise_floor) {
    return map.power(l, k) / noise_floor;
}

// ---------------------------------------------------------------------------
// OS-CFAR
// ---------------------------------------------------------------------------

struct CfarConfig {
    std::size_t guard_delay = 1;
    std::size_t guard_doppler = 1;
    std::size_t train_delay = 4;
    std::size_t train_doppler = 4;
    std::size_t order_k = 0;  // 0: ceil(0.75 * training cells)
    double alpha = 0.0;       // threshold scale; must be set (or calibrated) before use
    double target_pfa = 1e-3;

    std::size_t training_cells() const {
        const auto wl = 2 * (guard_delay + train_delay) + 1;
        const auto wk = 2 * (guard_doppler + train_doppler) + 1;
        return wl * wk - (2 * guard_delay + 1) * (2 * guard_doppler + 1);
    }

    std::size_t rank() const {
        if (order_k != 0) return order_k;
        return static_cast<std::size_t>(std::ceil(0.75 * static_cast<double>(training_cells())));
    }

    void validate(std::size_t rows, std::size_t cols) const {
        if (2 * (guard_delay + train_delay) + 1 > rows || 2 * (guard_doppler + train_doppler) + 1 > cols)
            throw WindowTooLarge("CFAR window does not fit in the " + std::to_string(rows) + " x " +
                                 std::to_string(cols) + " map");
        const auto n = training_cells();
        if (n == 0) throw std::invalid_argument("CfarConfig: no training cells");
        if (rank() < 1 || rank() > n) throw std::invalid_argument("CfarConfig: order_k must lie in [1, training cells]");
        if (!(target_pfa > 0.0 && target_pfa < 1.0)) throw std::invalid_argument("CfarConfig: target_pfa must lie in (0, 1)");
    }

    bool operator==(const CfarConfig&) const = default;
};

struct Detection {
    std::size_t delay_bin = 0;
    std::size_t doppler_bin = 0;
    double delay = 0.0;    // seconds
    double doppler = 0.0;  // Hz
    cplx amplitude{};
    double power = 0.0;
    double statistic = 0.0;  // power over the local order statistic
};

struct CfarResult {
    Matrix<double> threshold;  // alpha times the order statistic
    std::vector<Detection> detections;
};

namespace detail {

inline std::size_t wrap(long long i, std::size_t n) {
    const auto nn = static_cast<long long>(n);
    return static_cast<std::size_t>(((i % nn) + nn) % nn);
}

/// Training-cell powers of the window around (l, k), guard block excluded.
inline void training_values(const Matrix<double>& p, const CfarConfig& cfg, std::size_t l, std::size_t k,
                            std::vector<double>& out) {
    out.clear();
    const auto rl = static_cast<long long>(cfg.guard_delay + cfg.train_delay);
    const auto rk = static_cast<long long>(cfg.guard_doppler + cfg.train_doppler);
    const auto gl = static_cast<long long>(cfg.guard_delay);
    const auto gk = static_cast<long long>(cfg.guard_doppler);
    for (long long dl = -rl; dl <= rl; ++dl) {
        for (long long dk = -rk; dk <= rk; ++dk) {
            if (std::abs(dl) <= gl && std::abs(dk) <= gk) continue;
            out.push_back(p(wrap(static_cast<long long>(l) + dl, p.rows()), wrap(static_cast<long long>(k) + dk, p.cols())));
        }
    }
}

/// True if (l, k) beats every other cell of its guard block; ties go to the
/// earlier cell in raster order.
inline bool is_local_max(const Matrix<double>& p, const CfarConfig& cfg, std::size_t l, std::size_t k) {
    const double v = p(l, k);
    const auto self = l * p.cols() + k;
    const auto gl = static_cast<long long>(cfg.guard_delay);
    const auto gk = static_cast<long long>(cfg.guard_doppler);
    for (long long dl = -gl; dl <= gl; ++dl) {
        for (long long dk = -gk; dk <= gk; ++dk) {
            const auto ll = wrap(static_cast<long long>(l) + dl, p.rows());
            const auto kk = wrap(static_cast<long long>(k) + dk, p.cols());
            const auto other = ll * p.cols() + kk;
            if (other == self) continue;
            const double w = p(ll, kk);
            if (w > v || (w == v && other < self)) return false;
        }
    }
    return true;
}

inline double ratio(double power, double os) {
    if (os > 0.0) return power / os;
    return power > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

}  // namespace detail

/// The order_k-th smallest training value around (l, k).
inline double order_statistic(const Matrix<double>& power, const CfarConfig& cfg, std::size_t l, std::size_t k) {
    std::vector<double> train;
    detail::training_values(power, cfg, l, k, train);
    const auto r = cfg.rank() - 1;
    std::nth_element(train.begin(), train.begin() + static_cast<std::ptrdiff_t>(r), train.end());
    return train[r];
}

/// Adaptive threshold and peak-grouped detections. Detections are returned in
/// raster order with grid delay/Doppler left at zero (see the map overload).
inline CfarResult os_cfar(const Matrix<double>& power, const CfarConfig& cfg, unsigned workers = 1) {
    cfg.validate(power.rows(), power.cols());
    if (!(cfg.alpha > 0.0)) throw std::invalid_argument("os_cfar: alpha must be > 0 (calibrate first)");
    const auto rows = power.rows();
    const auto cols = power.cols();
    Matrix<double> os(rows, cols);
    parallel_for(rows, workers, [&](std::size_t l) {
        std::vector<double> train;
        const auto r = static_cast<std::ptrdiff_t>(cfg.rank() - 1);
        for (std::size_t k = 0; k < cols; ++k) {
            detail::training_values(power, cfg, l, k, train);
            std::nth_element(train.begin(), train.begin() + r, train.end());
            os(l, k) = train[static_cast<std::size_t>(r)];
        }
    });
    CfarResult res{Matrix<double>(rows, cols), {}};
    for (std::size_t l = 0; l < rows; ++l) {
        for (std::size_t k = 0; k < cols; ++k) {
            res.threshold(l, k) = cfg.alpha * os(l, k);
            const double p = power(l, k);
            if (p > res.threshold(l, k) && detail::is_local_max(power, cfg, l, k)) {
                Detection d;
                d.delay_bin = l;
                d.doppler_bin = k;
                d.power = p;
                d.statistic = detail::ratio(p, os(l, k));
                res.detections.push_back(d);
            }
        }
    }
    return res;
}

inline double signed_doppler_bin(std::size_t k, std::size_t n) {
    return k < (n + 1) / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
}

inline CfarResult os_cfar(const RangeDopplerMap& map, const CfarConfig& cfg, unsigned workers = 1) {
    auto res = os_cfar(map.power(), cfg, workers);
    const auto& p = map.params;
    for (auto& d : res.detections) {
        d.delay = static_cast<double>(d.delay_bin) * p.delay_resolution();
        d.doppler = signed_doppler_bin(d.doppler_bin, p.num_doppler_bins()) * p.doppler_resolution();
        d.amplitude = map.cells(d.delay_bin, d.doppler_bin);
    }
    return res;
}

/// Statistics (power over order statistic) of every local-maximum cell.
/// A cell with statistic > alpha is exactly a CFAR detection at that alpha.
inline std::vector<double> local_max_statistics(const Matrix<double>& power, const CfarConfig& cfg) {
    cfg.validate(power.rows(), power.cols());
    std::vector<double> out;
    for (std::size_t l = 0; l < power.rows(); ++l)
        for (std::size_t k = 0; k < power.cols(); ++k)
            if (detail::is_local_max(power, cfg, l, k))
                out.push_back(detail::ratio(power(l, k), order_statistic(power, cfg, l, k)));
    return out;
}

/// Picks alpha so that (#statistics > alpha) / total_cells equals target_pfa.
inline double calibrate_alpha(std::vector<double> stats, std::size_t total_cells, double target_pfa) {
    if (!(target_pfa > 0.0 && target_pfa < 1.0)) throw std::invalid_argument("calibrate_alpha: target_pfa must lie in (0, 1)");
    const auto want = static_cast<std::size_t>(std::llround(target_pfa * static_cast<double>(total_cells)));
    if (want < 1 || want >= stats.size())
        throw std::invalid_argument("calibrate_alpha: not enough noise cells for the requested false-alarm rate");
    std::sort(stats.begin(), stats.end(), std::greater<>());
    // Threshold between the want-th and (want+1)-th largest statistic.
    return 0.5 * (stats[want - 1] + stats[want]);
}

/// Closed-form alpha for i.i.d. exponential cells without peak grouping:
/// Pfa = prod_{i<k} (n - i) / (n - i + alpha).
inline double os_cfar_alpha_exponential(std::size_t n, std::size_t k, double pfa) {
    auto pfa_of = [&](double a) {
        double v = 1.0;
        for (std::size_t i = 0; i < k; ++i) v *= static_cast<double>(n - i) / (static_cast<double>(n - i) + a);
        return v;
    };
    double lo = 0.0, hi = 1.0;
    while (pfa_of(hi) > pfa) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (pfa_of(mid) > pfa ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

/// Synthesizes unit-gain echoes of a transmission as they appear after the
/// receive matched filter (chip rate).
class EchoModel {
public:
    explicit EchoModel(Transmission tx) : tx_(std::move(tx)) {}

    const Transmission& transmission() const noexcept { return tx_; }
    const FrameParams& params() const noexcept { return tx_.shaped.frame; }

    TimeSignal echo(double delay, double doppler) const {
        return matched_filter_rx(detail::superpose(tx_.shaped, {PointTarget{1.0, delay, doppler}}), tx_.pulse);
    }

    /// Matched-filtered, noise-free receive signal for a set of targets.
    TimeSignal received(const ChannelRealization& ch) const {
        return matched_filter_rx(apply_channel(tx_.shaped, ch), tx_.pulse);
    }

private:
    Transmission tx_;
};

struct EstimatorOptions {
    bool refine = false;        // 3-point parabolic interpolation on log-magnitude
    bool local_search = false;  // then maximize the single-target likelihood around the estimate
    int search_iterations = 24;
};

struct Estimate {
    double delay = 0.0;    // seconds
    double doppler = 0.0;  // Hz
    cplx amplitude{};
    bool edge_cell = false;  // refinement requested on a delay border; grid value kept
};

namespace detail {
inline double parabolic_offset(double left, double centre, double right) {
    const double a = std::log(std::max(left, 1e-300));
    const double b = std::log(std::max(centre, 1e-300));
    const double c = std::log(std::max(right, 1e-300));
    const double den = a - 2.0 * b + c;
    if (!(den < 0.0)) return 0.0;
    return std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
}

inline cplx inner(const TimeSignal& a, const TimeSignal& b) {
    if (a.size() != b.size()) throw LengthMismatch("inner product of signals with different lengths");
    cplx acc{};
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.samples[i] * std::conj(b.samples[i]);
    return acc;
}
}  // namespace detail

/// Delay/Doppler of a detection: grid values, optionally refined by
/// 3-point parabolic interpolation (delay axis stops at the map border,
/// Doppler axis wraps).
inline Estimate estimate_location(const RangeDopplerMap& map, const Detection& det, bool refine) {
    const auto& p = map.params;
    const auto m = p.num_delay_bins();
    const auto n = p.num_doppler_bins();
    const auto l = det.delay_bin;
    const auto k = det.doppler_bin;
    double dl = 0.0, dk = 0.0;
    Estimate e;
    if (refine) {
        if (l == 0 || l + 1 >= m) {
            e.edge_cell = true;
        } else {
            dl = detail::parabolic_offset(std::abs(map.cells(l - 1, k)), std::abs(map.cells(l, k)),
                                          std::abs(map.cells(l + 1, k)));
        }
        if (n >= 3)
            dk = detail::parabolic_offset(std::abs(map.cells(l, (k + n - 1) % n)), std::abs(map.cells(l, k)),
                                          std::abs(map.cells(l, (k + 1) % n)));
    }
    e.delay = (static_cast<double>(l) + dl) * p.delay_resolution();
    e.doppler = (signed_doppler_bin(k, n) + dk) * p.doppler_resolution();
    return e;
}

/// Least-squares amplitude of a unit-gain echo at (delay, doppler).
inline cplx estimate_amplitude(const TimeSignal& rx, const EchoModel& model, double delay, double doppler) {
    const auto e = model.echo(delay, doppler);
    const double ee = e.energy();
    return ee > 0.0 ? detail::inner(rx, e) / ee : cplx{};
}

/// Delay, Doppler and complex gain of one detection. `rx` is the
/// matched-filtered chip-rate signal the map was computed from.
inline Estimate estimate_parameters(const RangeDopplerMap& map, const Detection& det, const TimeSignal& rx,
                                    const EchoModel& model, const EstimatorOptions& opt = {}) {
    auto est = estimate_location(map, det, opt.refine);
    const auto& p = map.params;
    if (opt.local_search) {
        auto objective = [&](double tau, double nu) {
            const auto e = model.echo(tau, nu);
            const double ee = e.energy();
            return ee > 0.0 ? std::norm(detail::inner(rx, e)) / ee : 0.0;
        };
        // Golden-section search per axis, alternating, with a shrinking bracket.
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        auto golden = [&](double lo, double hi, auto&& f) {
            double a = lo, b = hi;
            double x1 = b - g * (b - a), x2 = a + g * (b - a);
            double f1 = f(x1), f2 = f(x2);
            for (int it = 0; it < opt.search_iterations; ++it) {
                if (f1 < f2) {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + g * (b - a);
                    f2 = f(x2);
                } else {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - g * (b - a);
                    f1 = f(x1);
                }
            }
            return 0.5 * (a + b);
        };
        const double t_max = p.slot_duration() * (1.0 - 1e-12);
        double half_t = 0.5 * p.delay_resolution();
        double half_v = 0.5 * p.doppler_resolution();
        for (int round = 0; round < 2; ++round) {
            const double t_lo = std::max(0.0, est.delay - half_t);
            const double t_hi = std::min(t_max, est.delay + half_t);
            const double nu = est.doppler;
            est.delay = golden(t_lo, t_hi, [&](double t) { return objective(t, nu); });
            const double tau = est.delay;
            est.doppler = golden(est.doppler - half_v, est.doppler + half_v, [&](double v) { return objective(tau, v); });
            half_t *= 0.5;
            half_v *= 0.5;
        }
    }
    est.amplitude = estimate_amplitude(rx, model, est.delay, est.doppler);
    return est;
}

// ---------------------------------------------------------------------------
// SIC
// ---------------------------------------------------------------------------

struct SicOptions {
    std::size_t max_targets = 4;
    EstimatorOptions estimator{true, true, 24};
    unsigned workers = 1;
};

struct SicResult {
    std::vector<Detection> detections;    // accepted, strongest first
    std::vector<double> residual_energy;  // before the first and after every accepted subtraction
    bool non_decreasing_residual = false;  // loop halted because a subtraction did not reduce energy
    TimeSignal residual;
};

/// Detect the strongest target, estimate it, subtract its echo, repeat. The
/// CFAR scale alpha stays fixed across iterations.
inline SicResult sic_detect(const TimeSignal& rx, const EchoModel& model, const CfarConfig& cfg,
                            const SicOptions& opt = {}) {
    if (opt.max_targets < 1) throw std::invalid_argument("sic_detect: max_targets must be >= 1");
    SicResult res{{}, {rx.energy()}, false, rx};
    const auto& ref = model.transmission().reference;
    for (std::size_t it = 0; it < opt.max_targets; ++it) {
        const auto map = range_doppler_map(res.residual, ref, opt.workers);
        const auto cf = os_cfar(map, cfg, opt.workers);
        if (cf.detections.empty()) break;
        const auto strongest = *std::max_element(cf.detections.begin(), cf.detections.end(),
                                                 [](const Detection& a, const Detection& b) { return a.power < b.power; });
        const auto est = estimate_parameters(map, strongest, res.residual, model, opt.estimator);
        const auto echo = model.echo(est.delay, est.doppler);
        TimeSignal next = res.residual;
        for (std::size_t i = 0; i < next.size(); ++i) next.samples[i] -= est.amplitude * echo.samples[i];
        const double e_next = next.energy();
        if (!(e_next < res.residual_energy.back())) {
            res.non_decreasing_residual = true;
            break;
        }
        Detection d = strongest;
        d.delay = est.delay;
        d.doppler = est.doppler;
        d.amplitude = est.amplitude;
        res.detections.push_back(d);
        res.residual_energy.push_back(e_next);
        res.residual = std::move(next);
    }
    return res;
}

inline SicResult sic_detect(const TimeSignal& rx, const Transmission& tx, const CfarConfig& cfg,
                            const SicOptions& opt = {}) {
    return sic_detect(rx, EchoModel(tx), cfg, opt);
}

}  // namespace ddisac
