#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "homsim/correlator.hpp"
#include "homsim/errors.hpp"

#include "oracle/brute_correlator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

using namespace homsim;
using correlator::CorrelationHistogram;

namespace {

std::vector<Timestamp> random_stream(std::mt19937_64& rng, std::size_t n, Timestamp span) {
    std::uniform_int_distribution<Timestamp> u(0, span);
    std::vector<Timestamp> s(n);
    for (auto& t : s) t = u(rng);
    std::sort(s.begin(), s.end());
    return s;
}

std::vector<Timestamp> poisson_stream(std::mt19937_64& rng, double rate_per_ps, Timestamp span) {
    std::exponential_distribution<double> gap(rate_per_ps);
    std::vector<Timestamp> s;
    for (double t = gap(rng); t < static_cast<double>(span); t += gap(rng)) s.push_back(static_cast<Timestamp>(t));
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

bool same_counts(const CorrelationHistogram& a, const CorrelationHistogram& b) {
    return a.same_binning(b) && a.counts == b.counts && a.n_a == b.n_a && a.n_b == b.n_b;
}

} // namespace

TEST_CASE("single pair lands in its bin") {
    const std::vector<Timestamp> a{0}, b{100};
    const auto h = correlator::cross_correlate(a, b, 10, 1000);
    CHECK(h.n_bins() == 200);
    CHECK(h.total_counts() == 1);
    const auto k = h.bin_of(100);
    REQUIRE(k.has_value());
    CHECK(h.counts[*k] == 1);
    CHECK(h.bin_lo(*k) == 100);
}

TEST_CASE("bins are half-open") {
    const std::vector<Timestamp> a{1000}, b{990, 1000, 1010, 2000, 0};
    const std::vector<Timestamp> sorted_b{0, 990, 1000, 1010, 2000};
    const auto h = correlator::cross_correlate(a, sorted_b, 10, 1000);
    CHECK(h.counts[*h.bin_of(-10)] == 1);
    CHECK(h.counts[*h.bin_of(0)] == 1);
    CHECK(h.counts[*h.bin_of(10)] == 1);
    // +1000 lies outside [-1000, 1000), -1000 inside
    CHECK(h.total_counts() == 4);
    CHECK(h.counts.front() == 1);
    CHECK_THROWS_AS(correlator::cross_correlate(a, b, 10, 1000), ValidationError);
}

TEST_CASE("identical streams give a symmetric histogram") {
    std::mt19937_64 rng(1);
    const auto a = random_stream(rng, 2000, 1'000'000);
    const auto b = a;
    // 1 ps bins so that tau and -tau are bin-wise mirrors
    const auto h = correlator::cross_correlate(a, b, 1, 500);
    for (std::int64_t d = 1; d < 500; ++d) CHECK(h.counts[*h.bin_of(d)] == h.counts[*h.bin_of(-d)]);
    CHECK(h.counts[*h.bin_of(0)] >= a.size());
}

TEST_CASE("autocorrelation edge cases") {
    CHECK(correlator::auto_correlate(std::vector<Timestamp>{5}, 10, 1000).total_counts() == 0);
    const auto h = correlator::auto_correlate(std::vector<Timestamp>{1000, 1100}, 10, 1000);
    CHECK(h.total_counts() == 2);
    CHECK(h.counts[*h.bin_of(100)] == 1);
    CHECK(h.counts[*h.bin_of(-100)] == 1);
    // repeated timestamps pair with each other but not with themselves
    const auto d = correlator::auto_correlate(std::vector<Timestamp>{50, 50}, 10, 100);
    CHECK(d.counts[*d.bin_of(0)] == 2);
}

TEST_CASE("sweep equals the brute-force oracle") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(0, 1500);
    std::uniform_int_distribution<int> width_pick(0, 3);
    const std::int64_t widths[] = {1, 7, 10, 250};
    for (int trial = 0; trial < 60; ++trial) {
        const std::int64_t w = widths[width_pick(rng)];
        const std::int64_t tau_max = w * 40;
        const Timestamp span = 1 + rng() % 200'000;
        const auto a = random_stream(rng, size(rng), span);
        const auto b = random_stream(rng, size(rng), span);
        const auto h = correlator::cross_correlate(a, b, w, tau_max);
        const auto ref = oracle::brute_cross(a, b, w, tau_max);
        REQUIRE(h.counts == ref.counts);
        const auto ha = correlator::auto_correlate(a, w, tau_max);
        REQUIRE(ha.counts == oracle::brute_auto(a, w, tau_max).counts);
    }
}

TEST_CASE("chunked correlation equals the single pass") {
    std::mt19937_64 rng(5);
    const auto a = random_stream(rng, 10'000, 50'000'000);
    const auto b = random_stream(rng, 10'000, 50'000'000);
    const double duration = 50'000'001;
    const auto whole = correlator::cross_correlate(a, b, 10, 20'000, duration);
    for (Timestamp chunk : {Timestamp{7'000}, Timestamp{20'000}, Timestamp{1'000'000}, Timestamp{60'000'000}}) {
        const auto c = correlator::cross_correlate_chunked(a, b, 10, 20'000, chunk, duration);
        CHECK(same_counts(c, whole));
        CHECK(c.duration_ps == whole.duration_ps);
    }
    CHECK(whole.counts == oracle::brute_cross(a, b, 10, 20'000).counts);
    CHECK_THROWS_AS(correlator::cross_correlate_chunked(a, b, 10, 20'000, 0, duration), ValidationError);
}

TEST_CASE("streaming equals batch") {
    std::mt19937_64 rng(8);
    const auto a = random_stream(rng, 5000, 5'000'000);
    const auto b = random_stream(rng, 4000, 5'000'000);
    std::uniform_int_distribution<std::size_t> step(0, 300);
    auto feed = [&](auto push, const std::vector<Timestamp>& s, std::size_t& pos) {
        const std::size_t n = std::min(step(rng), s.size() - pos);
        push(std::span<const Timestamp>(s.data() + pos, n));
        pos += n;
    };

    correlator::StreamingCorrelator sc(10, 2000);
    std::size_t ia = 0, ib = 0;
    while (ia < a.size() || ib < b.size()) {
        if (rng() % 2) feed([&](auto c) { sc.push_a(c); }, a, ia);
        else feed([&](auto c) { sc.push_b(c); }, b, ib);
    }
    const auto hs = sc.finish(5e6);
    const auto hb = correlator::cross_correlate(a, b, 10, 2000, 5e6);
    CHECK(same_counts(hs, hb));
    CHECK_THROWS_AS(sc.finish(), ValidationError);

    correlator::StreamingCorrelator ac(10, 2000, correlator::StreamingCorrelator::Mode::autocorrelation);
    std::size_t i = 0;
    while (i < a.size()) feed([&](auto c) { ac.push(c); }, a, i);
    CHECK(same_counts(ac.finish(), correlator::auto_correlate(a, 10, 2000)));

    correlator::StreamingCorrelator bad(10, 2000);
    bad.push_a(std::vector<Timestamp>{10, 20});
    CHECK_THROWS_AS(bad.push_a(std::vector<Timestamp>{15}), ValidationError);
    CHECK_THROWS_AS(bad.push(std::vector<Timestamp>{30}), ValidationError);
}

TEST_CASE("input validation") {
    const std::vector<Timestamp> s{1, 2, 3}, unsorted{3, 1};
    CHECK_THROWS_AS(correlator::cross_correlate(unsorted, s, 10, 100), ValidationError);
    CHECK_THROWS_AS(correlator::cross_correlate(s, unsorted, 10, 100), ValidationError);
    CHECK_THROWS_AS(correlator::auto_correlate(unsorted, 10, 100), ValidationError);
    CHECK_THROWS_AS(correlator::cross_correlate(s, s, 0, 100), ValidationError);
    CHECK_THROWS_AS(correlator::cross_correlate(s, s, 10, 105), ValidationError);
    CHECK_THROWS_AS(correlator::cross_correlate(s, s, 10, 0), ValidationError);
}

TEST_CASE("normalization") {
    SUBCASE("uncorrelated Poisson streams are flat at one") {
        std::mt19937_64 rng(99);
        const Timestamp span = 2'000'000'000'000;
        const auto a = poisson_stream(rng, 1e-6, span);
        const auto b = poisson_stream(rng, 1e-6, span);
        const auto h = correlator::normalize(correlator::cross_correlate(a, b, 100, 100'000, static_cast<double>(span)));
        double mean = 0;
        for (const auto& nb : *h.normalized) mean += nb.g2;
        mean /= static_cast<double>(h.n_bins());
        CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
        // per-bin expected counts r^2 dt T
        const double expected = 1e-6 * 1e-6 * 100 * static_cast<double>(span);
        CHECK(static_cast<double>(h.total_counts()) / static_cast<double>(h.n_bins()) ==
              doctest::Approx(expected).epsilon(0.01));
    }
    SUBCASE("formula and finite-duration correction") {
        auto h = CorrelationHistogram::empty(10, 100);
        h.n_a = 100;
        h.n_b = 200;
        h.duration_ps = 1000;
        h.counts[0] = 16;
        const auto n = correlator::normalize(h);
        const double tau = h.bin_center(0);
        const double g2 = 16.0 * 1000 * 1000 / (100.0 * 200 * 10 * (1000 - std::abs(tau)));
        CHECK((*n.normalized)[0].g2 == doctest::Approx(g2));
        CHECK((*n.normalized)[0].sigma == doctest::Approx(g2 / 4));
        CHECK((*n.normalized)[1].g2 == 0);
        CHECK(std::isnan((*n.normalized)[1].sigma));
    }
    SUBCASE("degenerate inputs") {
        auto h = CorrelationHistogram::empty(10, 100);
        h.duration_ps = 1000;
        CHECK_THROWS_AS(correlator::normalize(h), DomainError);
        h.n_a = h.n_b = 5;
        h.duration_ps = 100;
        CHECK_THROWS_AS(correlator::normalize(h), ValidationError);
    }
}

TEST_CASE("merge") {
    std::mt19937_64 rng(3);
    const auto a = random_stream(rng, 1000, 1'000'000), b = random_stream(rng, 1000, 1'000'000);
    const auto c = random_stream(rng, 1000, 1'000'000), d = random_stream(rng, 1000, 1'000'000);
    const auto h1 = correlator::cross_correlate(a, b, 10, 1000);
    const auto h2 = correlator::cross_correlate(c, d, 10, 1000);
    const auto h3 = correlator::cross_correlate(a, d, 10, 1000);
    const auto empty = CorrelationHistogram::empty(10, 1000);
    CHECK(same_counts(correlator::merge(h1, empty), h1));
    CHECK(correlator::merge(h1, empty).duration_ps == h1.duration_ps);
    CHECK(same_counts(correlator::merge(h1, h2), correlator::merge(h2, h1)));
    CHECK(same_counts(correlator::merge(correlator::merge(h1, h2), h3), correlator::merge(h1, correlator::merge(h2, h3))));
    const auto m = correlator::merge(h1, h2);
    CHECK(m.n_a == h1.n_a + h2.n_a);
    CHECK(m.duration_ps == h1.duration_ps + h2.duration_ps);
    CHECK_THROWS_AS(correlator::merge(h1, correlator::cross_correlate(a, b, 20, 1000)), ValidationError);
}

TEST_CASE("CSV") {
    std::mt19937_64 rng(4);
    const auto a = random_stream(rng, 3000, 1'000'000), b = random_stream(rng, 3000, 1'000'000);
    const auto h = correlator::normalize(correlator::cross_correlate(a, b, 10, 500));
    const auto text = correlator::to_csv(h);
    CHECK(text.rfind("tau_ps,counts,g2,sigma\n", 0) == 0);
    CHECK(text.find('\r') == std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(h.n_bins() + 1));

    const auto back = correlator::parse_csv(text);
    CHECK(back.same_binning(h));
    CHECK(back.counts == h.counts);
    for (std::size_t k = 0; k < h.n_bins(); ++k) {
        const auto& x = (*h.normalized)[k];
        const auto& y = (*back.normalized)[k];
        CHECK(x.g2 == y.g2);
        if (std::isnan(x.sigma)) CHECK(std::isnan(y.sigma));
        else CHECK(x.sigma == y.sigma);
    }

    const auto path = (std::filesystem::temp_directory_path() / "homsim_test_hist.csv").string();
    correlator::write_csv(path, h);
    CHECK(correlator::read_csv(path).counts == h.counts);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(correlator::read_csv("/nonexistent/dir/x.csv"), IoError);

    CHECK_THROWS_AS(correlator::parse_csv(""), FormatError);
    CHECK_THROWS_AS(correlator::parse_csv("tau,counts\n"), FormatError);
    CHECK_THROWS_AS(correlator::parse_csv("tau_ps,counts,g2,sigma\n5,1,1,1\n"), FormatError);
    CHECK_THROWS_AS(correlator::parse_csv("tau_ps,counts,g2,sigma\n5,1,1,1\n15,x,1,1\n"), FormatError);
    CHECK_THROWS_AS(correlator::parse_csv("tau_ps,counts,g2,sigma\n5,1,1,1\n15,1,1\n"), FormatError);
    CHECK_THROWS_AS(correlator::parse_csv("tau_ps,counts,g2,sigma\n5,1,1,1\n15,1,1,1\n35,1,1,1\n"), FormatError);
}
