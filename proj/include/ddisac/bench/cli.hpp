#pragma once

#include "ddisac/bench/config.hpp"
#include "ddisac/bench/experiments.hpp"
#include "ddisac/random.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <string>

namespace ddisac::bench {

enum ExitCode : int { exit_ok = 0, exit_invariant = 1, exit_usage = 2 };

struct SelftestCheck {
    std::string name;
    double value;
    double tolerance;
    bool pass() const { return value <= tolerance; }
};

/// Transform round trips, energy preservation and SFFT/Zak path equivalence.
inline std::vector<SelftestCheck> selftest_checks(std::uint64_t seed) {
    std::vector<SelftestCheck> out;
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    for (std::size_t m : {2, 4, 8, 16, 32}) {
        for (std::size_t n : {2, 4, 8, 16, 32}) {
            const FrameParams p(m, n);
            DDGrid x(p);
            for (auto& v : x.symbols.data()) v = {nd(gen), nd(gen)};
            const double e = x.energy();
            const auto X = isfft(x);
            const auto s = idzt(x);
            double rt_sfft = 0.0, rt_zak = 0.0;
            const auto xs = sfft(X);
            const auto xz = dzt(s);
            for (std::size_t i = 0; i < p.size(); ++i) {
                rt_sfft = std::max(rt_sfft, std::abs(xs.symbols.data()[i] - x.symbols.data()[i]));
                rt_zak = std::max(rt_zak, std::abs(xz.symbols.data()[i] - x.symbols.data()[i]));
            }
            const auto tag = std::to_string(m) + "x" + std::to_string(n);
            out.push_back({"sfft(isfft) " + tag, rt_sfft, 1e-10});
            out.push_back({"dzt(idzt) " + tag, rt_zak, 1e-10});
            out.push_back({"isfft energy " + tag, std::abs(X.energy() - e) / e, 1e-12});
            out.push_back({"idzt energy " + tag, std::abs(s.energy() - e) / e, 1e-12});
        }
    }
    const FrameParams p(16, 16);
    DDGrid x(p);
    for (auto& v : x.symbols.data()) v = {nd(gen), nd(gen)};
    const auto pulse = PulseSpec::rectangular(1);
    const auto a = modulate_otfs_sfft(x, pulse);
    const auto b = modulate_otfs_zak(x, pulse);
    double diff = a.size() == b.size() ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) diff = std::max(diff, std::abs(a.samples[i] - b.samples[i]));
    out.push_back({"sfft path == zak path 16x16", diff, 1e-10});
    return out;
}

/// Command-line entry point; returns the process exit code.
inline int cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Delay-Doppler ISAC waveform simulator"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    unsigned workers = 1;
    std::string waveform;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Experiment config file (TOML subset)");
        sub->add_option("--seed", seed, "Master seed (overrides the config)");
        sub->add_option("--out", out_dir, "Output directory (overrides DDISAC_OUTPUT_DIR and the config)");
        sub->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--waveform", waveform, "dd, tf or both")->check(CLI::IsMember({"dd", "tf", "both"}));
    };
    auto* amb = app.add_subcommand("ambiguity", "Zero-Doppler and zero-delay ambiguity cuts");
    auto* det = app.add_subcommand("detect", "Detection probability versus SNR");
    auto* mse = app.add_subcommand("mse", "Delay/Doppler estimation MSE versus SNR");
    auto* rdm = app.add_subcommand("rdmap", "Range-Doppler map with CFAR threshold and detections");
    auto* st = app.add_subcommand("selftest", "Transform and path-equivalence invariants");
    for (auto* s : {amb, det, mse, rdm}) add_common(s);
    st->add_option("--seed", seed, "Seed for the random test grids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }

    if (st->parsed()) {
        bool ok = true;
        for (const auto& c : selftest_checks(seed.value_or(1))) {
            if (!c.pass()) {
                ok = false;
                err << "FAIL " << c.name << ": " << c.value << " > " << c.tolerance << "\n";
            }
        }
        out << (ok ? "selftest: all invariants hold\n" : "selftest: invariant failure\n");
        return ok ? exit_ok : exit_invariant;
    }

    const Experiment kind = amb->parsed()   ? Experiment::ambiguity
                            : det->parsed() ? Experiment::detect
                            : mse->parsed() ? Experiment::mse
                                            : Experiment::rdmap;
    try {
        auto cfg = default_config(kind);
        if (!config_path.empty()) cfg = load_config(config_path, cfg);
        if (seed) cfg.master_seed = *seed;
        if (!waveform.empty()) cfg.waveforms = parse_waveforms(waveform);
        if (!out_dir.empty()) {
            cfg.output_dir = out_dir;
        } else if (const char* env = std::getenv("DDISAC_OUTPUT_DIR"); env && *env) {
            cfg.output_dir = env;
        }
        cfg.validate();

        std::vector<Artifact> artifacts;
        switch (kind) {
        case Experiment::ambiguity: artifacts = run_ambiguity(cfg, workers).artifacts; break;
        case Experiment::detect: artifacts = run_detection(cfg, workers).artifacts; break;
        case Experiment::mse: artifacts = run_mse(cfg, workers).artifacts; break;
        case Experiment::rdmap: artifacts = run_rdmap_demo(cfg, workers).artifacts; break;
        }
        write_artifacts(artifacts, cfg.output_dir);
        for (const auto& a : artifacts)
            out << (std::filesystem::path(cfg.output_dir) / a.file).string() << " (" << a.table.rows() << " rows)\n";
        return exit_ok;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_invariant;
    }
}

}  // namespace ddisac::bench
