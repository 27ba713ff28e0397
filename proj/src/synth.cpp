#include "homsim/synth.hpp"

#include "homsim/diagnostics.hpp"
#include "homsim/errors.hpp"
#include "homsim/model.hpp"
#include "homsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace homsim::synth {

namespace {

constexpr std::size_t kPhaseBlock = 1 << 16;

struct Candidate {
    Timestamp t;
    double u;
};

std::size_t span_count(Timestamp duration) {
    return static_cast<std::size_t>((duration + kSynthSpanPs - 1) / kSynthSpanPs);
}

/// Poisson arrivals inside span `k`, floored to ps with ties dropped. When
/// `with_uniform` is set every arrival also draws an acceptance uniform from
/// the same engine.
std::vector<Candidate> poisson_span(double rate_hz, Timestamp duration, std::size_t k,
                                    std::uint64_t seed, StreamTag tag, bool with_uniform) {
    std::vector<Candidate> out;
    if (rate_hz <= 0) return out;
    const Timestamp start = static_cast<Timestamp>(k) * kSynthSpanPs;
    const Timestamp stop = std::min(duration, start + kSynthSpanPs);
    const double length = static_cast<double>(stop - start);
    const double rate_per_ps = rate_hz / kPicosecondsPerSecond;
    out.reserve(static_cast<std::size_t>(rate_per_ps * length * 1.1) + 16);

    auto eng = keyed_engine(seed, tag, k);
    double offset = 0;
    for (;;) {
        offset += -std::log(uniform_open(eng)) / rate_per_ps;
        if (offset >= length) break;
        const double u = with_uniform ? uniform_open(eng) : 0.0;
        const Timestamp t = start + static_cast<Timestamp>(offset);
        if (t >= stop) break;
        if (!out.empty() && out.back().t == t) continue;
        out.push_back({t, u});
    }
    return out;
}

std::vector<Candidate> poisson_stream(double rate_hz, Timestamp duration, std::uint64_t seed,
                                      StreamTag tag, bool with_uniform) {
    const std::size_t n = span_count(duration);
    std::vector<std::vector<Candidate>> spans(n);
    parallel_for(n, [&](std::size_t k) {
        spans[k] = poisson_span(rate_hz, duration, k, seed, tag, with_uniform);
    });
    std::size_t total = 0;
    for (const auto& s : spans) total += s.size();
    std::vector<Candidate> out;
    out.reserve(total);
    for (auto& s : spans) {
        out.insert(out.end(), s.begin(), s.end());
        std::vector<Candidate>().swap(s);
    }
    return out;
}

} // namespace

void SynthConfig::validate() const {
    if (!(rate_laser_hz >= 0) || !std::isfinite(rate_laser_hz)) throw ValidationError("rate_laser_hz must be >= 0");
    if (!(rate_sp_hz >= 0) || !std::isfinite(rate_sp_hz)) throw ValidationError("rate_sp_hz must be >= 0");
    if (!(tau_l_ps > 0)) throw ValidationError("tau_l must be > 0");
    if (!(tau_c_ps > 0) || !std::isfinite(tau_c_ps)) throw ValidationError("tau_c must be > 0");
    if (!(g2_sp0 >= 0 && g2_sp0 <= 1)) throw ValidationError("g2_sp0 must lie in [0, 1]");
    if (!std::isfinite(delta_f_hz)) throw ValidationError("delta_f must be finite");
}

double SynthConfig::sp_bias_bound() const {
    return rate_sp_hz * tau_c_ps / kPicosecondsPerSecond * (1 - g2_sp0);
}

std::vector<double> gen_laser_phase(std::span<const Timestamp> times, double tau_l_ps,
                                    double delta_f_hz, std::uint64_t seed) {
    if (!(tau_l_ps > 0)) throw ValidationError("tau_l must be > 0");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (times[i] <= times[i - 1]) throw ValidationError("phase sample times must be strictly increasing");
    }
    const std::size_t n = times.size();
    std::vector<double> phase(n, 0.0);
    const bool diffusing = std::isfinite(tau_l_ps);
    if (diffusing) {
        const std::size_t blocks = (n + kPhaseBlock - 1) / kPhaseBlock;
        parallel_for(blocks, [&](std::size_t b) {
            auto eng = keyed_engine(seed, StreamTag::laser_phase, b);
            std::normal_distribution<double> normal;
            const std::size_t lo = b * kPhaseBlock;
            const std::size_t hi = std::min(n, lo + kPhaseBlock);
            for (std::size_t i = lo; i < hi; ++i) {
                const Timestamp prev = i == 0 ? 0 : times[i - 1];
                const double dt = static_cast<double>(times[i] - prev);
                phase[i] = normal(eng) * std::sqrt(2 * dt / tau_l_ps);
            }
        });
        for (std::size_t i = 1; i < n; ++i) phase[i] += phase[i - 1];
    }
    for (std::size_t i = 0; i < n; ++i) phase[i] += detuning_phase(delta_f_hz, times[i]);
    return phase;
}

EventStream gen_laser_events(const SynthConfig& cfg) {
    cfg.validate();
    const auto arrivals = poisson_stream(cfg.rate_laser_hz, cfg.duration_ps, cfg.seed,
                                         StreamTag::laser_times, false);
    std::vector<Timestamp> times(arrivals.size());
    std::transform(arrivals.begin(), arrivals.end(), times.begin(), [](const Candidate& c) { return c.t; });
    const auto phases = gen_laser_phase(times, cfg.tau_l_ps, cfg.delta_f_hz, cfg.seed);
    EventStream out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) out[i] = {times[i], Source::laser, phases[i]};
    return out;
}

EventStream gen_sp_events(const SynthConfig& cfg) {
    cfg.validate();
    if (cfg.sp_bias_bound() > 1e-2) {
        std::ostringstream msg;
        msg << "single-photon rate * tau_c = " << cfg.rate_sp_hz * cfg.tau_c_ps / kPicosecondsPerSecond
            << " is not small; thinned pair correlation biased by up to ~" << cfg.sp_bias_bound();
        warn(msg.str());
    }
    const auto candidates = poisson_stream(cfg.rate_sp_hz, cfg.duration_ps, cfg.seed,
                                           StreamTag::sp_candidates, true);
    EventStream out;
    out.reserve(candidates.size());
    bool have_last = false;
    Timestamp last = 0;
    for (const auto& c : candidates) {
        const double accept =
            have_last ? model::g2_sp(static_cast<double>(c.t - last), cfg.g2_sp0, cfg.tau_c_ps) : 1.0;
        if (c.u < accept) {
            out.push_back({c.t, Source::sp, 0.0});
            last = c.t;
            have_last = true;
        }
    }
    return out;
}

EventStream merge_streams(std::span<const PhotonEvent> laser, std::span<const PhotonEvent> sp) {
    EventStream out(laser.size() + sp.size());
    std::merge(laser.begin(), laser.end(), sp.begin(), sp.end(), out.begin(),
               [](const PhotonEvent& a, const PhotonEvent& b) { return a.t_ps < b.t_ps; });
    return out;
}

std::vector<Timestamp> timestamps(std::span<const PhotonEvent> events) {
    std::vector<Timestamp> out(events.size());
    std::transform(events.begin(), events.end(), out.begin(), [](const PhotonEvent& e) { return e.t_ps; });
    return out;
}

} // namespace homsim::synth
