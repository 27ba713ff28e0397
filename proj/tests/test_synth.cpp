#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "homsim/analysis.hpp"
#include "homsim/correlator.hpp"
#include "homsim/diagnostics.hpp"
#include "homsim/errors.hpp"
#include "homsim/model.hpp"
#include "homsim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <string>

using namespace homsim;

namespace {

bool strictly_increasing(const synth::EventStream& s) {
    return std::adjacent_find(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.t_ps >= b.t_ps; }) ==
           s.end();
}

} // namespace

TEST_CASE("laser photon count is Poisson") {
    synth::SynthConfig cfg;
    cfg.rate_laser_hz = 1e6;
    cfg.duration_ps = 1'000'000'000'000;
    const auto s = synth::gen_laser_events(cfg);
    CHECK(std::abs(static_cast<double>(s.size()) - 1e6) < 4 * std::sqrt(1e6));
    CHECK(strictly_increasing(s));
    CHECK(s.back().t_ps < cfg.duration_ps);
    for (const auto& e : s) REQUIRE(e.source == synth::Source::laser);
}

TEST_CASE("streams are deterministic and independent of the worker count") {
    synth::SynthConfig cfg;
    cfg.rate_laser_hz = 3e5;
    cfg.rate_sp_hz = 1e6;
    cfg.duration_ps = 200'000'000'000;
    cfg.seed = 99;
    ::setenv("HOMSIM_THREADS", "1", 1);
    const auto l1 = synth::gen_laser_events(cfg);
    const auto s1 = synth::gen_sp_events(cfg);
    ::setenv("HOMSIM_THREADS", "4", 1);
    const auto l2 = synth::gen_laser_events(cfg);
    const auto s2 = synth::gen_sp_events(cfg);
    ::unsetenv("HOMSIM_THREADS");
    CHECK(l1 == l2);
    CHECK(s1 == s2);
    CHECK(l1 == synth::gen_laser_events(cfg));
    cfg.seed = 100;
    CHECK(l1 != synth::gen_laser_events(cfg));
}

TEST_CASE("zero duration gives empty streams") {
    synth::SynthConfig cfg;
    cfg.duration_ps = 0;
    CHECK(synth::gen_laser_events(cfg).empty());
    CHECK(synth::gen_sp_events(cfg).empty());
}

TEST_CASE("invalid configs are rejected") {
    synth::SynthConfig cfg;
    cfg.rate_sp_hz = -1;
    CHECK_THROWS_AS(synth::gen_sp_events(cfg), ValidationError);
    cfg = {};
    cfg.tau_c_ps = 0;
    CHECK_THROWS_AS(synth::gen_sp_events(cfg), ValidationError);
    cfg = {};
    cfg.g2_sp0 = 2;
    CHECK_THROWS_AS(synth::gen_laser_events(cfg), ValidationError);
}

TEST_CASE("laser stream has flat g2") {
    synth::SynthConfig cfg;
    cfg.rate_laser_hz = 2e6;
    cfg.duration_ps = 1'000'000'000'000;
    const auto t = synth::timestamps(synth::gen_laser_events(cfg));
    auto h = correlator::normalize(correlator::auto_correlate(t, 1000, 1'000'000));
    // positive delays only: the autocorrelation is symmetric
    double chi2 = 0;
    std::size_t dof = 0;
    const double span = h.duration_ps;
    const double n = static_cast<double>(t.size());
    for (std::size_t k = h.n_bins() / 2; k < h.n_bins(); ++k) {
        const double e = n * n * 1000 * (span - std::abs(h.bin_center(k))) / (span * span);
        const double c = static_cast<double>(h.counts[k]);
        chi2 += (c - e) * (c - e) / e;
        ++dof;
    }
    // normal approximation of the chi-square tail, p > 1e-3
    const double z = (chi2 - static_cast<double>(dof)) / std::sqrt(2.0 * static_cast<double>(dof));
    CHECK(z < 3.09);
}

TEST_CASE("phase diffusion statistics") {
    const double tau_l = 150'000;
    SUBCASE("increment variance over 15 ns") {
        std::vector<Timestamp> times(100'000);
        for (std::size_t i = 0; i < times.size(); ++i) times[i] = 15'000 * (i + 1);
        const auto ph = synth::gen_laser_phase(times, tau_l, 0, 5);
        double s = 0, s2 = 0;
        for (std::size_t i = 1; i < ph.size(); ++i) {
            const double d = ph[i] - ph[i - 1];
            s += d;
            s2 += d * d;
        }
        const double n = static_cast<double>(ph.size() - 1);
        const double var = s2 / n - (s / n) * (s / n);
        CHECK(var == doctest::Approx(0.2).epsilon(0.03));
    }
    SUBCASE("coherence at one tau_l") {
        std::vector<Timestamp> times(100'001);
        for (std::size_t i = 0; i < times.size(); ++i) times[i] = 150'000 * (i + 1);
        const auto ph = synth::gen_laser_phase(times, tau_l, 0, 6);
        std::complex<double> acc = 0;
        for (std::size_t i = 1; i < ph.size(); ++i) acc += std::polar(1.0, ph[i] - ph[i - 1]);
        CHECK(std::abs(acc) / 1e5 == doctest::Approx(std::exp(-1.0)).epsilon(0.02 / 0.368));
    }
    SUBCASE("no diffusion and no detuning gives a constant phase") {
        std::vector<Timestamp> times{1, 50, 1000, 10'000'000};
        const auto ph = synth::gen_laser_phase(times, INFINITY, 0, 1);
        for (double v : ph) CHECK(v == 0);
    }
    SUBCASE("unsorted times are rejected") {
        std::vector<Timestamp> times{1, 50, 50};
        CHECK_THROWS_AS(synth::gen_laser_phase(times, tau_l, 0, 1), ValidationError);
    }
}

TEST_CASE("single-photon stream reproduces the antibunching dip") {
    synth::SynthConfig cfg;
    cfg.rate_laser_hz = 0;
    cfg.rate_sp_hz = 2e7;
    cfg.duration_ps = 500'000'000'000;
    cfg.seed = 17;
    const auto sp = synth::gen_sp_events(cfg);
    CHECK(strictly_increasing(sp));
    for (const auto& e : sp) REQUIRE((e.source == synth::Source::sp && e.phase_rad == 0));

    const auto t = synth::timestamps(sp);
    const auto h = correlator::normalize(correlator::auto_correlate(t, 10, 1000));
    const auto fit = analysis::fit_antibunching(h, 0.1, 100);
    CHECK(fit.converged);
    CHECK(fit.g2_0 == doctest::Approx(0.03).epsilon(0.01 / 0.03));
    CHECK(fit.tau_c_ps == doctest::Approx(115).epsilon(0.1));

    // per-bin agreement with the bin-averaged model curve
    const double n = static_cast<double>(t.size());
    int beyond3 = 0, beyond4 = 0;
    const double span = h.duration_ps;
    // positive delays only: each unordered pair appears at +tau and -tau
    for (std::size_t k = h.n_bins() / 2; k < h.n_bins(); ++k) {
        const double lo = static_cast<double>(h.bin_lo(k));
        double avg = 0;
        for (int i = 0; i < 100; ++i) avg += model::g2_sp(lo + 0.1 * (i + 0.5), cfg.g2_sp0, cfg.tau_c_ps) / 100;
        const double expected = avg * n * n * 10 * (span - std::abs(h.bin_center(k))) / (span * span);
        const double z = (static_cast<double>(h.counts[k]) - expected) / std::sqrt(expected);
        beyond3 += std::abs(z) > 3;
        beyond4 += std::abs(z) > 4;
    }
    CHECK(beyond4 == 0);
    CHECK(beyond3 <= 2);
}

TEST_CASE("high single-photon rate warns") {
    synth::SynthConfig cfg;
    cfg.rate_sp_hz = 1e9;
    cfg.duration_ps = 1'000'000;
    std::string seen;
    auto prev = set_warning_handler([&](std::string_view m) { seen = m; });
    (void)synth::gen_sp_events(cfg);
    set_warning_handler(std::move(prev));
    CHECK(seen.find("not small") != std::string::npos);
}

TEST_CASE("merge orders laser first on ties") {
    synth::EventStream l{{5, synth::Source::laser, 0.1}, {9, synth::Source::laser, 0.2}};
    synth::EventStream s{{5, synth::Source::sp, 0}, {7, synth::Source::sp, 0}};
    const auto m = synth::merge_streams(l, s);
    REQUIRE(m.size() == 4);
    CHECK(m[0].source == synth::Source::laser);
    CHECK(m[1].source == synth::Source::sp);
    CHECK(m[2].t_ps == 7);
    CHECK(m[3].t_ps == 9);
}
