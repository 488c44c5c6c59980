#include "catch_amalgamated.hpp"

#include "ddisac/bench/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ddisac;
using namespace ddisac::bench;

namespace {

ExperimentConfig small(Experiment e) {
    auto c = default_config(e);
    c.M = c.N = 16;
    c.trials = 12;
    c.calibration_maps = 20;
    if (e == Experiment::detect || e == Experiment::mse) c.snr_grid_db = {-5.0, 5.0};
    return c;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / ("ddisac_test_" + name);
    std::filesystem::remove_all(d);
    return d;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DDISAC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config serialization round-trips", "[bench][config]") {
    for (auto e : {Experiment::ambiguity, Experiment::detect, Experiment::mse, Experiment::rdmap}) {
        auto c = default_config(e);
        c.master_seed = 0xFFFFFFFFFFFFFFF1ull;
        c.cfar.alpha = 12.345678901234567;
        c.snr_grid_db.push_back(0.1 + 0.2);
        const auto text = serialize(c);
        const auto back = parse_config(text, ExperimentConfig{});
        CHECK(back == c);
        CHECK(serialize(back) == text);
    }
}

TEST_CASE("config parsing rejects what it does not know", "[bench][config]") {
    const auto base = default_config(Experiment::detect);
    CHECK_THROWS_AS(parse_config("[experiment]\nbogus = 1\n", base), ConfigError);
    CHECK_THROWS_AS(parse_config("[nonsense]\nM = 4\n", base), ConfigError);
    CHECK_THROWS_AS(parse_config("[experiment]\nM = \"sixteen\"\n", base), ConfigError);
    CHECK_THROWS_AS(parse_config("[experiment]\nwaveform = \"ofdm\"\n", base), ConfigError);
    CHECK_THROWS_AS(parse_config("[experiment\n", base), ConfigError);
    CHECK_THROWS_AS(parse_config("[cfar]\ntrain_delay = 40\n", base), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/ddisac.toml", base), ConfigError);

    const auto c = parse_config("# comment\n[experiment]\nM = 32 # trailing\nwaveform = \"tf\"\n", base);
    CHECK(c.M == 32);
    CHECK(c.N == base.N);
    CHECK(c.waveforms == std::vector<Waveform>{Waveform::tf});
}

TEST_CASE("shipped configs match the built-in defaults", "[bench][config]") {
    for (auto [e, name] : {std::pair{Experiment::ambiguity, "ambiguity"}, {Experiment::detect, "detect"},
                           {Experiment::mse, "mse"}, {Experiment::rdmap, "rdmap"}}) {
        auto want = default_config(e);
        want.output_dir = std::string("out/") + name;
        const auto path = std::filesystem::path(DDISAC_SOURCE_DIR) / "configs" / (std::string(name) + ".toml");
        CHECK(load_config(path.string(), ExperimentConfig{}) == want);
    }
}

TEST_CASE("Wilson interval", "[bench]") {
    const auto a = wilson_interval(50, 100);
    CHECK(a.low == Catch::Approx(0.40383).margin(1e-5));
    CHECK(a.high == Catch::Approx(0.59617).margin(1e-5));
    const auto z = wilson_interval(0, 2000);
    CHECK(z.low == 0.0);
    CHECK(z.high == Catch::Approx(0.0019168).margin(1e-6));
    const auto f = wilson_interval(2000, 2000);
    CHECK(f.high == 1.0);
    CHECK(f.low == Catch::Approx(1.0 - 0.0019168).margin(1e-6));
}

TEST_CASE("noise variance follows the per-slot SNR axis", "[bench]") {
    const auto c = small(Experiment::detect);
    const auto tx = make_transmission(Waveform::dd, c, 1);
    const double e = tx.shaped.energy();
    CHECK(noise_variance_for_snr(tx, 0.0) == Catch::Approx(e / 16.0));
    CHECK(noise_variance_for_snr(tx, 10.0) == Catch::Approx(e / 160.0));
}

TEST_CASE("experiment CSV schemas", "[bench][csv]") {
    SECTION("detection") {
        const auto res = run_detection(small(Experiment::detect));
        REQUIRE(res.artifacts.size() == 1);
        const auto& t = res.artifacts[0].table;
        CHECK(res.artifacts[0].file == "pd_vs_snr.csv");
        CHECK(t.header() == std::vector<std::string>{"waveform", "snr_db", "trials", "hits", "pd", "pd_wilson_low",
                                                     "pd_wilson_high"});
        CHECK(t.rows() == 4);
        for (const auto& p : res.points) {
            CHECK(p.trials == 12);
            CHECK(p.ci.low <= p.pd);
            CHECK(p.pd <= p.ci.high);
        }
    }
    SECTION("mse") {
        const auto res = run_mse(small(Experiment::mse));
        REQUIRE(res.artifacts.size() == 1);
        CHECK(res.artifacts[0].file == "mse_vs_snr.csv");
        CHECK(res.artifacts[0].table.header() ==
              std::vector<std::string>{"waveform", "snr_db", "trials", "mse_delay_bins2", "mse_doppler_bins2",
                                       "mse_delay_s2", "mse_doppler_hz2"});
        CHECK(res.artifacts[0].table.rows() == 4);
    }
    SECTION("ambiguity") {
        const auto c = small(Experiment::ambiguity);
        const auto res = run_ambiguity(c);
        REQUIRE(res.artifacts.size() == 4);
        std::vector<std::string> files;
        for (const auto& a : res.artifacts) {
            files.push_back(a.file);
            CHECK(a.table.header() == std::vector<std::string>{"waveform", "axis_kind", "normalized_value", "magnitude_db"});
        }
        CHECK(files == std::vector<std::string>{"ambiguity_dd_zero_doppler.csv", "ambiguity_dd_zero_delay.csv",
                                                "ambiguity_tf_zero_doppler.csv", "ambiguity_tf_zero_delay.csv"});
        // delay axis spans [-2, 2] at Q*M steps per unit, Doppler at 4*N
        CHECK(res.artifacts[0].table.rows() == 4 * 64 + 1);
        CHECK(res.artifacts[1].table.rows() == 4 * 64 + 1);
        for (const auto& [w, cuts] : res.cuts) {
            const auto& cut = cuts.zero_doppler;
            const auto peak = std::max_element(cut.magnitude_db.begin(), cut.magnitude_db.end());
            CHECK(*peak == 0.0);
            CHECK(cut.axis[std::size_t(peak - cut.magnitude_db.begin())] == 0.0);
        }
    }
    SECTION("rdmap") {
        const auto res = run_rdmap_demo(small(Experiment::rdmap));
        REQUIRE(res.artifacts.size() == 6);
        CHECK(res.artifacts[0].file == "rdmap_map_dd.csv");
        CHECK(res.artifacts[0].table.rows() == 256);
        CHECK(res.artifacts[1].table.rows() == 256);
        CHECK(res.artifacts[2].table.header().size() == 6);
        // three well-separated targets at 15 dB: each is detected on its own cell
        for (const auto& run : res.runs) {
            for (const auto& t : run.truth) {
                const auto l = std::size_t(std::lround(t.delay / run.map.params.delay_resolution()));
                const auto k = std::size_t((std::lround(t.doppler / run.map.params.doppler_resolution()) + 16) % 16);
                bool found = false;
                for (const auto& d : run.cfar.detections) found |= d.delay_bin == l && d.doppler_bin == k;
                CHECK(found);
            }
        }
    }
}

TEST_CASE("results do not depend on the worker count", "[bench][determinism]") {
    auto csv = [](const std::vector<Artifact>& a) {
        std::string s;
        for (const auto& x : a) s += x.file + "\n" + x.table.str();
        return s;
    };
    const auto d = small(Experiment::detect);
    CHECK(csv(run_detection(d, 1).artifacts) == csv(run_detection(d, 3).artifacts));
    const auto m = small(Experiment::mse);
    CHECK(csv(run_mse(m, 1).artifacts) == csv(run_mse(m, 2).artifacts));
    auto r = small(Experiment::rdmap);
    CHECK(csv(run_rdmap_demo(r, 1).artifacts) == csv(run_rdmap_demo(r, 2).artifacts));
    auto other = d;
    other.master_seed = 2;
    CHECK(csv(run_detection(d).artifacts) != csv(run_detection(other).artifacts));
}

TEST_CASE("CSV formatting", "[bench][csv]") {
    CsvTable t({"a", "b", "c"});
    t.add({std::string("dd"), 0.1, 3LL});
    t.add({std::string("tf"), -std::numeric_limits<double>::infinity(), -1LL});
    CHECK(t.str() == "a,b,c\ndd,0.10000000000000001,3\ntf,-inf,-1\n");
    CHECK_THROWS_AS(t.add({1.0}), std::invalid_argument);
}

TEST_CASE("selftest invariants hold", "[bench][selftest]") {
    for (const auto& c : selftest_checks(4)) {
        INFO(c.name);
        CHECK(c.pass());
    }
}

TEST_CASE("command-line interface", "[bench][cli]") {
    CHECK(run_cli("selftest") == exit_ok);
    CHECK(run_cli("--help") == exit_ok);
    CHECK(run_cli("") == exit_usage);
    CHECK(run_cli("frobnicate") == exit_usage);
    CHECK(run_cli("detect --config /nonexistent/missing.toml") == exit_usage);
    CHECK(run_cli("detect --workers 0") == exit_usage);
    CHECK(run_cli("detect --waveform ofdm") == exit_usage);

    const auto cfg = scratch_dir("cfg");
    std::filesystem::create_directories(cfg);
    {
        std::ofstream bad(cfg / "bad.toml");
        bad << "[experiment]\nunknown_key = 3\n";
    }
    CHECK(run_cli("detect --config " + (cfg / "bad.toml").string()) == exit_usage);

    const auto d1 = scratch_dir("d1"), d2 = scratch_dir("d2");
    REQUIRE(run_cli("ambiguity --seed 7 --workers 1 --out " + d1.string()) == exit_ok);
    REQUIRE(run_cli("ambiguity --seed 7 --workers 2 --out " + d2.string()) == exit_ok);
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(d1)) {
        ++files;
        CHECK(read_file(e.path()) == read_file(d2 / e.path().filename()));
    }
    CHECK(files == 4);

    // the output directory can come from the environment
    const auto d3 = scratch_dir("d3");
    ::setenv("DDISAC_OUTPUT_DIR", d3.c_str(), 1);
    CHECK(run_cli("ambiguity --seed 7 --waveform dd") == exit_ok);
    ::unsetenv("DDISAC_OUTPUT_DIR");
    CHECK(read_file(d3 / "ambiguity_dd_zero_delay.csv") == read_file(d1 / "ambiguity_dd_zero_delay.csv"));
    for (const auto& d : {cfg, d1, d2, d3}) std::filesystem::remove_all(d);
}
