#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "homsim/errors.hpp"
#include "homsim/model.hpp"

#include "oracle/moment_oracle.hpp"

#include <cmath>
#include <random>

using namespace homsim;
using model::ModelParams;

namespace {

ModelParams random_params(std::mt19937_64& rng, bool balanced) {
    std::uniform_real_distribution<double> u(0, 1);
    ModelParams p;
    p.eta = 2 * u(rng);
    p.v0 = u(rng);
    p.tau_l_ps = 1e3 + 5e5 * u(rng);
    p.tau_c_ps = 10 + 500 * u(rng);
    p.g2_sp0 = u(rng);
    p.delta_f_hz = 1e9 * u(rng);
    if (!balanced) {
        p.r = 0.05 + 0.9 * u(rng);
        p.t = (1 - p.r) * (0.7 + 0.3 * u(rng));
    }
    return p;
}

oracle::MomentParams to_oracle(const ModelParams& p, bool parallel) {
    return {p.eta, p.v0, p.r, p.t, p.tau_l_ps, p.tau_c_ps, p.g2_sp0, p.delta_f_hz, parallel};
}

} // namespace

TEST_CASE("g1 envelope") {
    CHECK(model::g1_envelope(0, 150'000) == 1.0);
    CHECK(model::g1_envelope(150'000, 150'000) == doctest::Approx(0.36788).epsilon(1e-5));
    CHECK(model::g1_envelope(-75'000, 150'000) == doctest::Approx(0.60653).epsilon(1e-5));
    CHECK(model::g1_envelope(-75'000, 150'000) == model::g1_envelope(75'000, 150'000));
    CHECK_THROWS_AS(model::g1_envelope(1, 0), DomainError);
    CHECK_THROWS_AS(model::g1_envelope(1, -5), DomainError);
}

TEST_CASE("single-photon g2") {
    CHECK(model::g2_sp(0, 0.03, 115) == doctest::Approx(0.03));
    CHECK(model::g2_sp(1e9, 0.03, 115) == doctest::Approx(1.0));
    CHECK(model::g2_sp(115, 0.03, 115) == doctest::Approx(0.643157).epsilon(1e-5));
    CHECK_THROWS_AS(model::g2_sp(0, 0.03, 0), DomainError);
}

TEST_CASE("normalization") {
    ModelParams p;
    CHECK(model::normalization(p) == doctest::Approx(0.36));
    p.eta = 0;
    CHECK(model::normalization(p) == doctest::Approx(0.25));
    p.eta = 1;
    p.r = 0.6;
    p.t = 0.4;
    CHECK(model::normalization(p) == doctest::Approx(1.0));
    p.eta = 0;
    p.r = 0;
    p.t = 1;
    CHECK_THROWS_AS(model::normalization(p), DomainError);
}

TEST_CASE("parameter validation") {
    ModelParams p;
    CHECK_NOTHROW(p.validate());
    auto bad = [](auto edit) {
        ModelParams q;
        edit(q);
        CHECK_THROWS_AS(q.validate(), DomainError);
    };
    bad([](ModelParams& q) { q.eta = -0.1; });
    bad([](ModelParams& q) { q.v0 = 1.1; });
    bad([](ModelParams& q) { q.g2_sp0 = -0.01; });
    bad([](ModelParams& q) { q.tau_l_ps = 0; });
    bad([](ModelParams& q) { q.tau_c_ps = -1; });
    bad([](ModelParams& q) { q.r = 0.7; });
    bad([](ModelParams& q) { q.delta_f_hz = NAN; });
    p.r = 0.4;
    p.t = 0.4;
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("cross-port correlations at the paper defaults") {
    ModelParams p;
    CHECK(model::g2_cross_perp(0, p) == doctest::Approx(0.32639).epsilon(1e-5));
    CHECK(model::g2_cross_perp(1e7, p) == doctest::Approx(1.0));
    CHECK(model::g2_cross_par(0, p) == doctest::Approx(0.09028).epsilon(1e-4));

    ModelParams single = p;
    single.eta = 0;
    CHECK(model::g2_cross_perp(0, single) == doctest::Approx(0.03));

    ModelParams beat = p;
    beat.delta_f_hz = 10e6;
    CHECK(model::g2_cross_par(50'000, beat) > model::g2_cross_perp(50'000, beat));

    ModelParams flat = p;
    flat.v0 = 0;
    for (double tau : {-3e5, -1e3, 0.0, 57.0, 2e4}) CHECK(model::g2_cross_par(tau, flat) == model::g2_cross_perp(tau, flat));
}

TEST_CASE("visibility") {
    ModelParams p;
    CHECK(model::v_hom(0, p) == doctest::Approx(0.72340).epsilon(1e-5));
    CHECK(model::v_hom(20'000, p) == doctest::Approx(0.23611 * std::exp(-20'000.0 / 150'000)).epsilon(1e-4));
    const double v0 = model::v_hom(0, p);
    p.delta_f_hz = 500e6;
    CHECK(model::v_hom(0, p) == v0);
}

TEST_CASE("optimal ratio and background") {
    CHECK(model::optimal_eta(0.03) == doctest::Approx(0.17321).epsilon(1e-5));
    CHECK(model::optimal_eta(0) == 0);
    CHECK(model::optimal_eta(1) == 1);
    CHECK(model::background_peak(0.2, 0.85) == doctest::Approx(0.23611).epsilon(1e-5));
    CHECK(model::background_peak(1, 0.85) == doctest::Approx(0.425));
    CHECK(model::background_peak(0.7, 0) == 0);
}

TEST_CASE("same-port correlations") {
    ModelParams p;
    CHECK(model::g2_auto_par(0, p) == doctest::Approx(0.5625));
    CHECK(model::g2_auto_perp(0, p) == model::g2_cross_perp(0, p));
    CHECK(model::v_same_port(0, p) == doctest::Approx(0.72340).epsilon(1e-5));
    CHECK(model::g2_auto_par(1e8, p) == doctest::Approx(1.0));
    CHECK(model::g2_auto_perp(1e8, p) == doctest::Approx(1.0));
}

TEST_CASE("cqed figures") {
    const auto f = model::cqed_figures({});
    CHECK(f.cooperativity == doctest::Approx(6.9).epsilon(0.01));
    CHECK(f.critical_photon_number == doctest::Approx(6.9e-4).epsilon(0.01));
    model::CqedParams dephased;
    dephased.gamma_star_ghz = dephased.gamma_par_ghz / 2; // doubles gamma_perp
    CHECK(f.cooperativity / model::cqed_figures(dephased).cooperativity == doctest::Approx(2.0).epsilon(1e-14));
    model::CqedParams zero;
    zero.kappa_ghz = 0;
    CHECK_THROWS_AS(model::cqed_figures(zero), DomainError);
    zero = {};
    zero.g_ghz = -1;
    CHECK_THROWS_AS(model::cqed_figures(zero), DomainError);
}

TEST_CASE("closed form matches the definitional ratio") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        auto p = random_params(rng, true);
        if (p.eta < 1e-3) p.eta = 1e-3;
        const double tau = u(rng) * 3 * p.tau_l_ps;
        const double perp = model::g2_cross_perp(tau, p);
        const double ratio = (perp - model::g2_cross_par(tau, p)) / perp;
        worst = std::max(worst, std::abs(ratio - model::v_hom_closed_form(tau, p)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("symmetry, asymptotics and same-port/cross-port sum") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 200; ++i) {
        auto p = random_params(rng, i % 2 == 0);
        const double tau = u(rng) * 4 * p.tau_l_ps;
        using F = double (*)(double, const ModelParams&);
        for (F f : {F(model::g2_cross_perp), F(model::g2_cross_par), F(model::g2_auto_perp), F(model::g2_auto_par)}) {
            CHECK(f(tau, p) == f(-tau, p));
            const double far = 100 * std::max(p.tau_l_ps, p.tau_c_ps);
            CHECK(std::abs(f(far, p) - 1) < 1e-9);
        }
        const double sum = model::g2_auto_par(tau, p) + model::g2_cross_par(tau, p);
        CHECK(sum == doctest::Approx(2 * model::g2_cross_perp(tau, p)).epsilon(1e-13));
    }
}

TEST_CASE("argmax of v_hom(0) over eta") {
    for (double g0 : {0.01, 0.03, 0.2, 0.6}) {
        ModelParams p;
        p.g2_sp0 = g0;
        auto f = [&](double eta) {
            p.eta = eta;
            return model::v_hom(0, p);
        };
        double a = 1e-6, b = 2;
        const double phi = 0.5 * (std::sqrt(5.0) - 1);
        for (int it = 0; it < 200; ++it) {
            const double c = b - phi * (b - a), d = a + phi * (b - a);
            if (f(c) > f(d)) b = d;
            else a = c;
        }
        CHECK(std::abs(0.5 * (a + b) - model::optimal_eta(g0)) < 1e-6);
    }
}

TEST_CASE("background never exceeds the classical limit") {
    double best = 0;
    for (int i = 0; i <= 400; ++i) {
        for (int j = 0; j <= 20; ++j) {
            const double eta = 0.01 * i, v0 = 0.05 * j;
            const double b = model::background_peak(eta, v0);
            CHECK(b <= 0.5);
            if (b == 0.5) CHECK((eta == 1 && v0 == 1));
            best = std::max(best, b);
        }
    }
    CHECK(best == 0.5);
}

TEST_CASE("zero-delay visibility is independent of detuning") {
    ModelParams p;
    const double ref = model::v_hom(0, p);
    for (double df : {10e6, 50e6, 500e6, 1.5e9}) {
        p.delta_f_hz = df;
        CHECK(model::v_hom(0, p) == ref);
    }
}

TEST_CASE("cross-port correlations agree with the field-moment oracle") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 300; ++i) {
        auto p = random_params(rng, i % 3 == 0);
        if (p.eta < 1e-3) p.eta = 1e-3;
        const double tau = u(rng) * 2 * p.tau_l_ps;
        CHECK(model::g2_cross_perp(tau, p) == doctest::Approx(oracle::moment_g2(1, 2, tau, to_oracle(p, false))).epsilon(1e-10));
        CHECK(model::g2_cross_par(tau, p) == doctest::Approx(oracle::moment_g2(1, 2, tau, to_oracle(p, true))).epsilon(1e-10));
    }
}

TEST_CASE("same-port correlations agree with the field-moment oracle on a balanced splitter") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 300; ++i) {
        auto p = random_params(rng, true);
        const double tau = u(rng) * 2 * p.tau_l_ps;
        CHECK(std::abs(model::g2_auto_par(tau, p) - oracle::moment_g2(1, 1, tau, to_oracle(p, true))) < 1e-10);
        CHECK(std::abs(model::g2_auto_perp(tau, p) - oracle::moment_g2(1, 1, tau, to_oracle(p, false))) < 1e-10);
        CHECK(std::abs(model::g2_auto_par(tau, p) - oracle::moment_g2(2, 2, tau, to_oracle(p, true))) < 1e-10);
    }
}
