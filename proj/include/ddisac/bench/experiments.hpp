#pragma once

// Monte-Carlo experiments behind the ambiguity, detection, MSE and
// range-Doppler demo outputs. Every random draw comes from a seed derived
// from (master seed, waveform, stage, index), and per-trial results are
// stored by index, so outputs do not depend on the number of workers.

#include "ddisac/ambiguity.hpp"
#include "ddisac/bench/config.hpp"
#include "ddisac/bench/csv.hpp"
#include "ddisac/channel.hpp"
#include "ddisac/parallel.hpp"
#include "ddisac/random.hpp"
#include "ddisac/sensing.hpp"
#include "ddisac/waveforms.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace ddisac::bench {

struct Artifact {
    std::string file;
    CsvTable table;
};

inline void write_artifacts(const std::vector<Artifact>& artifacts, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    for (const auto& a : artifacts) a.table.write(dir / a.file);
}

struct WilsonInterval {
    double low;
    double high;
};

/// 95 % Wilson score interval for a binomial proportion.
inline WilsonInterval wilson_interval(std::size_t hits, std::size_t n, double z = 1.959963984540054) {
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(hits) / nn;
    const double z2 = z * z;
    const double den = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / den;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / den;
    // the endpoints are exact at the boundaries; rounding would otherwise leave p outside
    const double low = hits == 0 ? 0.0 : std::max(0.0, centre - half);
    const double high = hits == n ? 1.0 : std::min(1.0, centre + half);
    return {low, high};
}

// Stage tags mixed into derived seeds.
enum SeedTag : std::uint64_t { tag_calibration = 1, tag_trial = 2, tag_ambiguity = 3, tag_rdmap = 4 };

/// DD frames carry a single symbol (the pulsone); TF frames carry random QPSK.
inline Transmission make_transmission(Waveform w, const ExperimentConfig& c, std::uint64_t seed) {
    const auto src = w == Waveform::dd ? SymbolSource::impulse(0, 0) : SymbolSource::qpsk(seed);
    return transmit(w, src, c.params(), c.pulse);
}

/// Noise variance per sample such that one slot, range-compressed, reaches
/// `snr_db`: sigma^2 = (E_frame / N) / 10^(snr/10).
inline double noise_variance_for_snr(const Transmission& tx, double snr_db) {
    const double slot_energy = tx.shaped.energy() / static_cast<double>(tx.shaped.frame.num_doppler_bins());
    return slot_energy / std::pow(10.0, snr_db / 10.0);
}

/// Channel, noise and receive matched filter; returns the chip-rate signal.
inline TimeSignal receive_chip_rate(const Transmission& tx, std::vector<PointTarget> targets, double noise_variance,
                                    std::uint64_t noise_seed) {
    const auto r = receive(tx.shaped, ChannelRealization{std::move(targets), noise_variance}, noise_seed);
    return matched_filter_rx(r, tx.pulse);
}

/// CFAR scale for one waveform: the configured alpha, or one calibrated on
/// noise-only maps pushed through the complete receive chain.
inline double cfar_alpha(Waveform w, const ExperimentConfig& c, unsigned workers) {
    if (c.cfar.alpha > 0.0) return c.cfar.alpha;
    const auto p = c.params();
    std::vector<std::vector<double>> per_map(c.calibration_maps);
    parallel_for(c.calibration_maps, workers, [&](std::size_t i) {
        const auto wi = static_cast<std::uint64_t>(w);
        const auto tx = make_transmission(w, c, derive_seed(c.master_seed, {wi, tag_calibration, i, 0}));
        const auto rx = receive_chip_rate(tx, {}, 1.0, derive_seed(c.master_seed, {wi, tag_calibration, i, 1}));
        per_map[i] = local_max_statistics(range_doppler_map(rx, tx.reference).power(), c.cfar);
    });
    std::vector<double> stats;
    for (const auto& v : per_map) stats.insert(stats.end(), v.begin(), v.end());
    return calibrate_alpha(std::move(stats), c.calibration_maps * p.size(), c.cfar.target_pfa);
}

// ---------------------------------------------------------------------------
// Targets and trials
// ---------------------------------------------------------------------------

inline PointTarget draw_target(TargetModel model, const FrameParams& p, std::mt19937_64& gen) {
    const auto m = p.num_delay_bins();
    const auto n = p.num_doppler_bins();
    PointTarget t;
    if (model == TargetModel::on_grid_random_bin) {
        const long long kmax = n >= 3 ? static_cast<long long>(n / 2) - 1 + static_cast<long long>(n % 2) : 0;
        const auto l0 = std::uniform_int_distribution<std::size_t>(0, m - 1)(gen);
        const auto k0 = std::uniform_int_distribution<long long>(-kmax, kmax)(gen);
        t.delay = static_cast<double>(l0) * p.delay_resolution();
        t.doppler = static_cast<double>(k0) * p.doppler_resolution();
    } else {
        const double tmax = p.slot_duration() * static_cast<double>(m - 1) / static_cast<double>(m);
        t.delay = tmax > 0.0 ? std::uniform_real_distribution<double>(0.0, tmax)(gen) : 0.0;
        const double vmax = 0.5 / p.slot_duration();
        do {
            t.doppler = std::uniform_real_distribution<double>(-vmax, vmax)(gen);
        } while (t.doppler == -vmax);
    }
    t.gain = std::polar(1.0, std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(gen));
    return t;
}

/// Doppler difference in bins wrapped to [-N/2, N/2).
inline double wrap_doppler_bins(double d, std::size_t n) {
    const double nn = static_cast<double>(n);
    d = std::fmod(d + nn / 2.0, nn);
    if (d < 0.0) d += nn;
    return d - nn / 2.0;
}

struct TrialRecord {
    std::size_t index = 0;
    PointTarget truth;
    bool detected = false;   // a CFAR detection within one bin of the truth on both axes
    bool estimated = false;  // an estimate was produced (CFAR hit or argmax fallback)
    double delay_hat = 0.0;
    double doppler_hat = 0.0;
    double err_delay_bins2 = 0.0;
    double err_doppler_bins2 = 0.0;
};

struct TrialOptions {
    bool estimate = false;  // fill the estimate/error fields
};

/// One single-target trial at one SNR point.
inline TrialRecord run_trial(Waveform w, const ExperimentConfig& c, double alpha, std::size_t snr_index,
                             std::size_t trial, const TrialOptions& opt) {
    const auto p = c.params();
    const auto wi = static_cast<std::uint64_t>(w);
    std::mt19937_64 gen(derive_seed(c.master_seed, {wi, tag_trial, snr_index, trial, 0}));
    TrialRecord rec;
    rec.index = trial;
    rec.truth = draw_target(c.target_model, p, gen);

    const auto tx = make_transmission(w, c, derive_seed(c.master_seed, {wi, tag_trial, snr_index, trial, 1}));
    const double var = noise_variance_for_snr(tx, c.snr_grid_db[snr_index]);
    const auto rx = receive_chip_rate(tx, {rec.truth}, var, derive_seed(c.master_seed, {wi, tag_trial, snr_index, trial, 2}));
    const auto map = range_doppler_map(rx, tx.reference);
    auto cfg = c.cfar;
    cfg.alpha = alpha;
    const auto cf = os_cfar(map, cfg);

    const double true_l = rec.truth.delay / p.delay_resolution();
    const double true_k = rec.truth.doppler / p.doppler_resolution();
    const auto n = p.num_doppler_bins();
    for (const auto& d : cf.detections) {
        const double el = static_cast<double>(d.delay_bin) - true_l;
        const double ek = wrap_doppler_bins(static_cast<double>(d.doppler_bin) - true_k, n);
        if (std::abs(el) <= 1.0 + 1e-9 && std::abs(ek) <= 1.0 + 1e-9) {
            rec.detected = true;
            break;
        }
    }

    if (opt.estimate) {
        Detection pick;
        if (!cf.detections.empty()) {
            pick = *std::max_element(cf.detections.begin(), cf.detections.end(),
                                     [](const Detection& a, const Detection& b) { return a.power < b.power; });
        } else {
            // highest response after matched filtering
            double best = -1.0;
            for (std::size_t l = 0; l < p.num_delay_bins(); ++l)
                for (std::size_t k = 0; k < n; ++k)
                    if (map.power(l, k) > best) {
                        best = map.power(l, k);
                        pick.delay_bin = l;
                        pick.doppler_bin = k;
                    }
        }
        const auto est = estimate_location(map, pick, c.refine);
        rec.estimated = true;
        rec.delay_hat = est.delay;
        rec.doppler_hat = est.doppler;
        const double el = est.delay / p.delay_resolution() - true_l;
        const double ek = wrap_doppler_bins(est.doppler / p.doppler_resolution() - true_k, n);
        rec.err_delay_bins2 = el * el;
        rec.err_doppler_bins2 = ek * ek;
    }
    return rec;
}

inline std::vector<TrialRecord> run_trials(Waveform w, const ExperimentConfig& c, double alpha, std::size_t snr_index,
                                           const TrialOptions& opt, unsigned workers) {
    std::vector<TrialRecord> out(c.trials);
    parallel_for(c.trials, workers, [&](std::size_t t) { out[t] = run_trial(w, c, alpha, snr_index, t, opt); });
    return out;
}

// ---------------------------------------------------------------------------
// Detection probability
// ---------------------------------------------------------------------------

struct PdPoint {
    Waveform waveform;
    double snr_db;
    std::size_t trials;
    std::size_t hits;
    double pd;
    WilsonInterval ci;
};

struct DetectionResult {
    std::vector<PdPoint> points;
    std::vector<std::pair<Waveform, double>> alpha;
    std::vector<Artifact> artifacts;
};

inline DetectionResult run_detection(const ExperimentConfig& c, unsigned workers = 1) {
    c.validate();
    DetectionResult res;
    CsvTable table({"waveform", "snr_db", "trials", "hits", "pd", "pd_wilson_low", "pd_wilson_high"});
    for (const auto w : c.waveforms) {
        const double alpha = cfar_alpha(w, c, workers);
        res.alpha.emplace_back(w, alpha);
        for (std::size_t s = 0; s < c.snr_grid_db.size(); ++s) {
            const auto recs = run_trials(w, c, alpha, s, {}, workers);
            std::size_t hits = 0;
            for (const auto& r : recs) hits += r.detected ? 1 : 0;
            const double pd = static_cast<double>(hits) / static_cast<double>(recs.size());
            const auto ci = wilson_interval(hits, recs.size());
            res.points.push_back({w, c.snr_grid_db[s], recs.size(), hits, pd, ci});
            table.add({std::string(to_string(w)), c.snr_grid_db[s], static_cast<long long>(recs.size()),
                       static_cast<long long>(hits), pd, ci.low, ci.high});
        }
    }
    res.artifacts.push_back({"pd_vs_snr.csv", std::move(table)});
    return res;
}

// ---------------------------------------------------------------------------
// Estimation MSE
// ---------------------------------------------------------------------------

struct MsePoint {
    Waveform waveform;
    double snr_db;
    std::size_t trials;
    double mse_delay_bins2;
    double mse_doppler_bins2;
};

struct MseResult {
    std::vector<MsePoint> points;
    std::vector<Artifact> artifacts;
};

inline MseResult run_mse(const ExperimentConfig& c, unsigned workers = 1) {
    c.validate();
    const auto p = c.params();
    MseResult res;
    CsvTable table({"waveform", "snr_db", "trials", "mse_delay_bins2", "mse_doppler_bins2", "mse_delay_s2",
                    "mse_doppler_hz2"});
    const double d2 = p.delay_resolution() * p.delay_resolution();
    const double v2 = p.doppler_resolution() * p.doppler_resolution();
    for (const auto w : c.waveforms) {
        const double alpha = cfar_alpha(w, c, workers);
        for (std::size_t s = 0; s < c.snr_grid_db.size(); ++s) {
            const auto recs = run_trials(w, c, alpha, s, {true}, workers);
            double sd = 0.0, sv = 0.0;
            for (const auto& r : recs) {
                sd += r.err_delay_bins2;
                sv += r.err_doppler_bins2;
            }
            const double nn = static_cast<double>(recs.size());
            const MsePoint pt{w, c.snr_grid_db[s], recs.size(), sd / nn, sv / nn};
            res.points.push_back(pt);
            table.add({std::string(to_string(w)), pt.snr_db, static_cast<long long>(pt.trials), pt.mse_delay_bins2,
                       pt.mse_doppler_bins2, pt.mse_delay_bins2 * d2, pt.mse_doppler_bins2 * v2});
        }
    }
    res.artifacts.push_back({"mse_vs_snr.csv", std::move(table)});
    return res;
}

// ---------------------------------------------------------------------------
// Ambiguity cuts
// ---------------------------------------------------------------------------

struct AmbiguityCuts {
    AmbiguityCut zero_doppler;  // over delay / T
    AmbiguityCut zero_delay;    // over Doppler * T
};

/// Cuts through the auto-ambiguity of the shaped frame: delay in [-2T, 2T]
/// at the sample spacing, Doppler in [-2/T, 2/T] at a quarter Doppler bin.
inline AmbiguityCuts ambiguity_cuts(const Transmission& tx, unsigned workers = 1) {
    const auto& p = tx.shaped.frame;
    const auto q = tx.shaped.oversampling;
    AmbiguityOptions opt;
    opt.workers = workers;
    const auto delay_axis = symmetric_axis(2.0, q * p.num_delay_bins());
    const auto doppler_axis = symmetric_axis(2.0, 4 * p.num_doppler_bins());
    const auto zd = auto_ambiguity(tx.shaped, delay_axis, {0.0}, opt);
    const auto zv = auto_ambiguity(tx.shaped, {0.0}, doppler_axis, opt);
    return {zero_doppler_cut(zd), zero_delay_cut(zv)};
}

struct AmbiguityResult {
    std::vector<std::pair<Waveform, AmbiguityCuts>> cuts;
    std::vector<Artifact> artifacts;
};

inline AmbiguityResult run_ambiguity(const ExperimentConfig& c, unsigned workers = 1) {
    c.validate();
    AmbiguityResult res;
    for (const auto w : c.waveforms) {
        const auto wi = static_cast<std::uint64_t>(w);
        const auto tx = make_transmission(w, c, derive_seed(c.master_seed, {wi, tag_ambiguity, 0}));
        auto cuts = ambiguity_cuts(tx, workers);
        const std::string name = to_string(w);
        auto emit = [&](const AmbiguityCut& cut, const char* kind, const char* suffix) {
            CsvTable t({"waveform", "axis_kind", "normalized_value", "magnitude_db"});
            for (std::size_t i = 0; i < cut.axis.size(); ++i)
                t.add({name, std::string(kind), cut.axis[i], cut.magnitude_db[i]});
            res.artifacts.push_back({"ambiguity_" + name + "_" + suffix + ".csv", std::move(t)});
        };
        emit(cuts.zero_doppler, "delay", "zero_doppler");
        emit(cuts.zero_delay, "doppler", "zero_delay");
        res.cuts.emplace_back(w, std::move(cuts));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Range-Doppler map demo
// ---------------------------------------------------------------------------

/// Well-separated on-grid targets spread diagonally over the DD grid.
inline std::vector<PointTarget> demo_targets(const FrameParams& p, std::size_t count, std::uint64_t seed) {
    const auto m = static_cast<double>(p.num_delay_bins());
    const auto n = p.num_doppler_bins();
    const double span = n >= 3 ? static_cast<double>(n) - 2.0 : 0.0;
    const double k_lo = n >= 3 ? -(static_cast<double>(n / 2) - 1.0) : 0.0;
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::vector<PointTarget> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double frac = (static_cast<double>(i) + 0.5) / static_cast<double>(count);
        const double l = std::floor(m * frac);
        const double k = std::round(frac * span) + k_lo;
        out.push_back({std::polar(1.0, phase(gen)), l * p.delay_resolution(), k * p.doppler_resolution()});
    }
    return out;
}

struct RdMapResult {
    struct PerWaveform {
        Waveform waveform;
        std::vector<PointTarget> truth;
        RangeDopplerMap map;
        CfarResult cfar;
    };
    std::vector<PerWaveform> runs;
    std::vector<Artifact> artifacts;
};

inline RdMapResult run_rdmap_demo(const ExperimentConfig& c, unsigned workers = 1) {
    c.validate();
    const auto p = c.params();
    RdMapResult res;
    auto db = [](double v) { return 10.0 * std::log10(v); };
    for (const auto w : c.waveforms) {
        const auto wi = static_cast<std::uint64_t>(w);
        const double alpha = cfar_alpha(w, c, workers);
        const auto truth = demo_targets(p, c.target_count, derive_seed(c.master_seed, {wi, tag_rdmap, 0}));
        const auto tx = make_transmission(w, c, derive_seed(c.master_seed, {wi, tag_rdmap, 1}));
        const double var = noise_variance_for_snr(tx, c.snr_grid_db.front());
        const auto rx = receive_chip_rate(tx, truth, var, derive_seed(c.master_seed, {wi, tag_rdmap, 2}));
        auto map = range_doppler_map(rx, tx.reference, workers);
        auto cfg = c.cfar;
        cfg.alpha = alpha;
        auto cf = os_cfar(map, cfg, workers);

        const std::string name = to_string(w);
        CsvTable mt({"delay_bin", "doppler_bin", "power_db"});
        CsvTable tt({"delay_bin", "doppler_bin", "power_db"});
        for (std::size_t l = 0; l < p.num_delay_bins(); ++l) {
            for (std::size_t k = 0; k < p.num_doppler_bins(); ++k) {
                mt.add({static_cast<long long>(l), static_cast<long long>(k), db(map.power(l, k))});
                tt.add({static_cast<long long>(l), static_cast<long long>(k), db(cf.threshold(l, k))});
            }
        }
        CsvTable dt({"delay_bin", "doppler_bin", "delay_s", "doppler_hz", "power_db", "statistic"});
        for (const auto& d : cf.detections)
            dt.add({static_cast<long long>(d.delay_bin), static_cast<long long>(d.doppler_bin), d.delay, d.doppler,
                    db(d.power), d.statistic});
        res.artifacts.push_back({"rdmap_map_" + name + ".csv", std::move(mt)});
        res.artifacts.push_back({"rdmap_threshold_" + name + ".csv", std::move(tt)});
        res.artifacts.push_back({"rdmap_detections_" + name + ".csv", std::move(dt)});
        res.runs.push_back({w, truth, std::move(map), std::move(cf)});
    }
    return res;
}

}  // namespace ddisac::bench
