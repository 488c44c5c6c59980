#include "catch_amalgamated.hpp"

#include "ddisac/waveforms.hpp"
#include "oracle/reference.hpp"

#include <random>

using namespace ddisac;

namespace {

DDGrid qpsk_dd(const FrameParams& p, std::uint64_t seed) { return SymbolSource::qpsk(seed).dd_grid(p); }

TimeSignal first_chips(const TimeSignal& s, std::size_t n) {
    return TimeSignal(std::vector<cplx>(s.samples.begin(), s.samples.begin() + static_cast<std::ptrdiff_t>(n)), s.frame);
}

double max_diff(std::span<const cplx> a, std::span<const cplx> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

// Raised-cosine (tx * rx) response at lag j samples.
double cascade(const std::vector<double>& h, long long j) {
    double acc = 0.0;
    const auto n = static_cast<long long>(h.size());
    for (long long i = 0; i < n; ++i)
        if (i + j >= 0 && i + j < n) acc += h[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i + j)];
    return acc;
}

}  // namespace

TEST_CASE("rrc taps: shape, normalization and closed form", "[waveforms][rrc]") {
    SECTION("beta = 0 gives normalized sinc samples") {
        const auto h = rrc_taps(0.0, 16, 4);
        const auto ref = oracle::rrc_taps(0.0, 16, 4);
        REQUIRE(h.size() == 65);
        for (std::size_t i = 0; i < h.size(); ++i) CHECK(std::abs(h[i] - ref[i]) < 1e-12);
    }
    SECTION("centre tap matches the analytic t = 0 value") {
        const auto h = rrc_taps(0.3, 16, 4);
        const auto ref = oracle::rrc_taps(0.3, 16, 4);
        double raw = 0.0;
        for (int i = 0; i <= 64; ++i) raw += std::pow(oracle::rrc((i - 32) / 4.0, 0.3), 2);
        const double centre = (1.0 - 0.3 + 4.0 * 0.3 / oracle::pi) / std::sqrt(raw);
        CHECK(std::abs(h[32] - centre) < 1e-12);
        for (std::size_t i = 0; i < h.size(); ++i) CHECK(std::abs(h[i] - ref[i]) < 1e-9);
        CHECK(*std::max_element(h.begin(), h.end()) == h[32]);
    }
    SECTION("singular points use the limit") {
        for (auto [beta, q] : {std::pair{1.0, 2}, std::pair{1.0, 4}, std::pair{0.5, 2}, std::pair{0.25, 1}}) {
            const auto h = rrc_taps(beta, 8, q);
            const auto ref = oracle::rrc_taps(beta, 8, q);
            for (std::size_t i = 0; i < h.size(); ++i) {
                REQUIRE(std::isfinite(h[i]));
                CHECK(std::abs(h[i] - ref[i]) < 1e-8);
            }
        }
    }
    SECTION("symmetric, unit energy, length span*Q+1") {
        const auto h = rrc_taps(0.3, 64, 4);
        REQUIRE(h.size() == 257);
        double e = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            CHECK(h[i] == h[h.size() - 1 - i]);
            e += h[i] * h[i];
        }
        CHECK(std::abs(e - 1.0) < 1e-14);
    }
    SECTION("cascade is Nyquist at symbol spacing") {
        const auto h = PulseSpec::rrc().taps();
        const double peak = cascade(h, 0);
        for (long long j = 1; j <= 64; ++j) CHECK(std::abs(cascade(h, 4 * j)) <= 1e-3 * peak);
    }
    SECTION("invalid arguments") {
        CHECK_THROWS_AS(rrc_taps(-0.1, 16, 4), InvalidRolloff);
        CHECK_THROWS_AS(rrc_taps(1.1, 16, 4), InvalidRolloff);
        CHECK_THROWS_AS(rrc_taps(std::nan(""), 16, 4), InvalidRolloff);
        CHECK_THROWS_AS(rrc_taps(0.3, 1, 4), std::invalid_argument);
        CHECK_THROWS_AS(rrc_taps(0.3, 16, 0), std::invalid_argument);
    }
}

TEST_CASE("zak modulation of a single impulse", "[waveforms][pulsone]") {
    SECTION("rectangular Q=1 is the comb 1/sqrt(N) at multiples of M") {
        const FrameParams p(8, 4);
        DDGrid x(p);
        x(0, 0) = 1.0;
        const auto s = modulate_otfs_zak(x, PulseSpec::rectangular(1));
        REQUIRE(s.size() == 32);
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double want = i % 8 == 0 ? 0.5 : 0.0;
            CHECK(std::abs(s.samples[i] - want) < 1e-15);
        }
    }
    SECTION("rrc pulse train peaks at Q(l0 + nM) plus the group delay") {
        const FrameParams p(16, 8);
        const auto pulse = PulseSpec::rrc();
        const std::size_t l0 = 5, k0 = 3;
        DDGrid x(p);
        x(l0, k0) = 1.0;
        const auto s = modulate_otfs_zak(x, pulse);
        const std::size_t q = 4, group = 128;
        double peak = 0.0;
        for (const auto& v : s.samples) peak = std::max(peak, std::abs(v));
        std::vector<std::size_t> lobes;
        for (std::size_t i = 1; i + 1 < s.size(); ++i) {
            const double a = std::abs(s.samples[i]);
            if (a > 0.5 * peak && a >= std::abs(s.samples[i - 1]) && a > std::abs(s.samples[i + 1])) lobes.push_back(i);
        }
        REQUIRE(lobes.size() == 8);
        for (std::size_t n = 0; n < 8; ++n) {
            CHECK(lobes[n] == q * (l0 + n * 16) + group);
            // Doppler tone across the lobes
            const cplx ratio = s.samples[lobes[n]] / s.samples[lobes[0]];
            CHECK(std::abs(ratio - std::polar(1.0, 2 * oracle::pi * double(n * k0) / 8.0)) < 1e-2);
        }
    }
    SECTION("energy of a single impulse is preserved when the pulses do not overlap") {
        // slot length equals the pulse span, so the pulsone's pulses are disjoint
        const FrameParams p(64, 4);
        DDGrid x(p);
        x(2, 1) = cplx(0.6, -0.8);
        const auto s = modulate_otfs_zak(x, PulseSpec::rrc());
        CHECK(std::abs(s.energy() - 1.0) < 1e-6);
    }
}

TEST_CASE("shaped energy stays within the cascaded ISI bound", "[waveforms][energy]") {
    const auto pulse = PulseSpec::rrc();
    const auto h = pulse.taps();
    double isi = 0.0;
    for (long long j = 1; j <= 64; ++j) isi += 2.0 * std::abs(cascade(h, 4 * j));
    const FrameParams p(16, 16);
    const auto x = qpsk_dd(p, 5);
    const double ex = x.energy();
    for (const auto& s : {modulate_otfs_zak(x, pulse), modulate_otfs_sfft(x, pulse)})
        CHECK(std::abs(s.energy() - ex) / ex <= isi);
    CHECK(isi == Catch::Approx(1.0540895e-3).epsilon(1e-6));
}

TEST_CASE("sfft and zak paths agree for rectangular pulses", "[waveforms][equivalence]") {
    for (std::size_t m : {2, 4, 8, 16}) {
        for (std::size_t n : {2, 4, 8, 16}) {
            const FrameParams p(m, n);
            const auto x = qpsk_dd(p, m * 31 + n);
            const auto a = modulate_otfs_sfft(x, PulseSpec::rectangular(1));
            const auto b = modulate_otfs_zak(x, PulseSpec::rectangular(1));
            REQUIRE(a.size() == b.size());
            CHECK(max_diff(a.samples, b.samples) <= 1e-10);
            CHECK(max_diff(b.samples, idzt(x).samples) == 0.0);
        }
    }
    const FrameParams p(8, 8);
    DDGrid x(p);
    x(0, 0) = 1.0;
    const auto chips = slot_idft(isfft(x));
    for (std::size_t j = 0; j < chips.size(); ++j)
        CHECK(std::abs(chips.samples[j] - (j % 8 == 0 ? 1.0 / std::sqrt(8.0) : 0.0)) < 1e-15);
}

TEST_CASE("ofdm modulation", "[waveforms][ofdm]") {
    const FrameParams p(8, 4);
    SECTION("DC subcarrier gives a constant 1/sqrt(M) sequence") {
        TFGrid X(p);
        for (std::size_t n = 0; n < 4; ++n) X(n, 0) = 1.0;
        const auto s = modulate_ofdm(X, PulseSpec::rectangular(1));
        REQUIRE(s.size() == 32);
        for (const auto& v : s.samples) CHECK(std::abs(v - 1.0 / std::sqrt(8.0)) < 1e-15);
    }
    SECTION("one active slot stays inside its span plus the filter transient") {
        const auto pulse = PulseSpec::rrc();
        const std::size_t n0 = 2, q = 4;
        TFGrid X(p);
        const auto full = SymbolSource::qpsk(9).tf_grid(p);
        for (std::size_t m = 0; m < 8; ++m) X(n0, m) = full(n0, m);
        const auto s = modulate_ofdm(X, pulse);
        const std::size_t lo = n0 * 8 * q, hi = (n0 + 1) * 8 * q - q + pulse.taps().size();
        double inside = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i < lo || i >= hi) CHECK(s.samples[i] == cplx{});
            else inside += std::norm(s.samples[i]);
        }
        CHECK(inside > 0.0);
    }
    SECTION("same seed, same samples") {
        const auto a = modulate_ofdm(SymbolSource::qpsk(42).tf_grid(p), PulseSpec::rrc());
        const auto b = modulate_ofdm(SymbolSource::qpsk(42).tf_grid(p), PulseSpec::rrc());
        CHECK(a.samples == b.samples);
        const auto c = modulate_ofdm(SymbolSource::qpsk(43).tf_grid(p), PulseSpec::rrc());
        CHECK(a.samples != c.samples);
    }
}

TEST_CASE("symbol sources", "[waveforms][source]") {
    const FrameParams p(16, 8);
    const auto g = SymbolSource::qpsk(7).dd_grid(p);
    const double a = 1.0 / std::sqrt(2.0);
    for (const auto& v : g.symbols.data()) {
        CHECK(std::abs(std::abs(v.real()) - a) < 1e-15);
        CHECK(std::abs(std::abs(v.imag()) - a) < 1e-15);
    }
    CHECK(std::abs(g.energy() - 128.0) < 1e-9);
    CHECK(SymbolSource::qpsk(7).dd_grid(p).symbols == g.symbols);

    const auto imp = SymbolSource::impulse(3, 2).dd_grid(p);
    CHECK(std::abs(imp(3, 2) - std::sqrt(128.0)) < 1e-12);
    CHECK(std::abs(imp.energy() - 128.0) < 1e-9);
    CHECK_THROWS_AS(SymbolSource::impulse(16, 0).dd_grid(p), std::invalid_argument);

    Matrix<cplx> m(16, 8, cplx(2.0, 1.0));
    CHECK(std::abs(SymbolSource::fixed(m).dd_grid(p).energy() - 128.0) < 1e-9);
    CHECK_THROWS_AS(SymbolSource::fixed(Matrix<cplx>(4, 4)).dd_grid(p), LengthMismatch);
}

TEST_CASE("transmitted energy is equalized across waveforms", "[waveforms][power]") {
    const FrameParams p(16, 16);
    for (const auto& pulse : {PulseSpec::rrc(), PulseSpec::rectangular(1), PulseSpec::rectangular(4)}) {
        for (const auto& src : {SymbolSource::qpsk(3), SymbolSource::impulse(0, 0), SymbolSource::impulse(4, 9)}) {
            const auto dd = transmit(Waveform::dd, src, p, pulse);
            const auto tf = transmit(Waveform::tf, src, p, pulse);
            CHECK(std::abs(dd.shaped.energy() - 256.0) / 256.0 < 1e-9);
            CHECK(std::abs(tf.shaped.energy() - 256.0) / 256.0 < 1e-9);
            CHECK(dd.reference.size() == 256);
            CHECK(tf.reference.size() == 256);
        }
    }
}

TEST_CASE("matched filter loopback", "[waveforms][loopback]") {
    SECTION("rrc, zak path, recovers the DD grid") {
        for (auto [m, n] : {std::pair<std::size_t, std::size_t>{16, 16}, {8, 32}, {32, 8}}) {
            const FrameParams p(m, n);
            const auto x = qpsk_dd(p, m + n);
            const auto y = matched_filter_rx(modulate_otfs_zak(x, PulseSpec::rrc()), PulseSpec::rrc());
            CHECK(y.size() == p.size() + 64);
            const auto back = dzt(first_chips(y, p.size()));
            CHECK(max_diff(back.symbols.data(), x.symbols.data()) <= 1e-3);
        }
    }
    SECTION("rectangular Q=1 is exact") {
        const FrameParams p(16, 16);
        const auto x = qpsk_dd(p, 1);
        const auto y = matched_filter_rx(modulate_otfs_zak(x, PulseSpec::rectangular(1)), PulseSpec::rectangular(1));
        CHECK(max_diff(dzt(y).symbols.data(), x.symbols.data()) <= 1e-10);
    }
    SECTION("rectangular Q=4 is exact") {
        const FrameParams p(8, 8);
        const auto x = qpsk_dd(p, 2);
        const auto pulse = PulseSpec::rectangular(4);
        const auto y = matched_filter_rx(modulate_otfs_zak(x, pulse), pulse);
        CHECK(max_diff(dzt(first_chips(y, 64)).symbols.data(), x.symbols.data()) <= 1e-12);
    }
    SECTION("ofdm recovers the TF grid") {
        const FrameParams p(16, 16);
        const auto X = SymbolSource::qpsk(4).tf_grid(p);
        const auto y = matched_filter_rx(modulate_ofdm(X, PulseSpec::rrc()), PulseSpec::rrc());
        CHECK(max_diff(slot_dft(first_chips(y, 256)).symbols.data(), X.symbols.data()) <= 1e-3);
    }
    SECTION("zero in, zero out") {
        const FrameParams p(8, 8);
        const auto y = matched_filter_rx(TimeSignal(std::vector<cplx>(400), p, 4), PulseSpec::rrc());
        for (const auto& v : y.samples) CHECK(v == cplx{});
    }
    SECTION("a delay of d*Q samples delays the output by d chips") {
        const FrameParams p(8, 8);
        const auto s = modulate_otfs_zak(qpsk_dd(p, 8), PulseSpec::rrc());
        const auto y = matched_filter_rx(s, PulseSpec::rrc());
        for (std::size_t d : {1, 3, 7}) {
            auto shifted = s;
            shifted.samples.insert(shifted.samples.begin(), d * 4, cplx{});
            const auto yd = matched_filter_rx(shifted, PulseSpec::rrc());
            REQUIRE(yd.size() == y.size() + d);
            for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(yd.samples[i + d] - y.samples[i]) < 1e-12);
        }
    }
    SECTION("short input is rejected") {
        const FrameParams p(8, 8);
        CHECK_THROWS_AS(matched_filter_rx(TimeSignal(std::vector<cplx>(255), p, 4), PulseSpec::rrc()), LengthMismatch);
        CHECK_THROWS_AS(matched_filter_rx(TimeSignal(std::vector<cplx>(300), p, 2), PulseSpec::rrc()),
                        std::invalid_argument);
    }
}
