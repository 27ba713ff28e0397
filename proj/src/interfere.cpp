#include "homsim/interfere.hpp"

#include "homsim/diagnostics.hpp"
#include "homsim/errors.hpp"
#include "homsim/rng.hpp"

#include <algorithm>
#include <cmath>

namespace homsim::interfere {

using synth::PhotonEvent;
using synth::Source;

namespace {

void require_sorted(std::span<const PhotonEvent> events, const char* what) {
    for (std::size_t i = 1; i < events.size(); ++i) {
        if (events[i].t_ps < events[i - 1].t_ps)
            throw ValidationError(std::string(what) + " events are not sorted by time");
    }
}

/// Interference coefficient K(tau) = v0 |g1_L(tau)| cos(2 pi df tau).
double kernel_coefficient(double tau_ps, const model::ModelParams& m) {
    return m.v0 * model::g1_envelope(tau_ps, m.tau_l_ps) *
           std::cos(kTwoPi * m.delta_f_hz * (std::abs(tau_ps) / kPicosecondsPerSecond));
}

/// Output port 0 or 1 of the combining splitter mapped to detectors.
void emit(ClickStreams& out, int port, bool same_port, Timestamp t, std::mt19937_64& eng) {
    if (!same_port) {
        (port == 0 ? out.d1 : out.d2).push_back(t);
        return;
    }
    if (port != 0) return; // second port unobserved in the single-port HBT topology
    (uniform_open(eng) < 0.5 ? out.d1 : out.d2).push_back(t);
}

} // namespace

void InterferometerConfig::validate() const {
    model.validate();
    if (amp_overlap) {
        const double a = *amp_overlap;
        if (!(a >= 0 && a <= 1)) throw ValidationError("amp_overlap must lie in [0, 1]");
        if (!allow_overlap_mismatch && std::abs(a * a - model.v0) >= 1e-9)
            throw ValidationError("amp_overlap^2 must equal v0 (set the override flag to decouple them)");
    }
}

double InterferometerConfig::effective_amp_overlap() const {
    return amp_overlap ? *amp_overlap : std::sqrt(model.v0);
}

void DetectorConfig::validate() const {
    if (!(jitter_sigma_ps >= 0) || !(dead_time_ps >= 0) || !(dark_rate_hz >= 0))
        throw ValidationError("detector jitter, dead time and dark rate must be >= 0");
    if (!(efficiency >= 0 && efficiency <= 1)) throw ValidationError("detector efficiency must lie in [0, 1]");
}

double routing_fringe_contrast(double eta, double amp_overlap) {
    if (!(eta >= 0)) throw DomainError("eta must be >= 0");
    return 2 * std::sqrt(eta) * amp_overlap / (1 + eta);
}

double pair_kernel(PairType type, Polarization pol, bool same_port, double tau_ps,
                   const model::ModelParams& m) {
    if (type != PairType::ls || pol != Polarization::parallel) return 1.0;
    const double k = kernel_coefficient(tau_ps, m);
    return same_port ? 1 + k : 1 - k;
}

ClickStreams route_phase_engine(std::span<const PhotonEvent> laser, std::span<const PhotonEvent> sp,
                                const InterferometerConfig& cfg) {
    cfg.validate();
    require_sorted(laser, "laser");
    require_sorted(sp, "single-photon");
    const auto& m = cfg.model;
    const double contrast =
        cfg.pol == Polarization::parallel ? routing_fringe_contrast(m.eta, cfg.effective_amp_overlap()) : 0.0;
    const double diffusion = std::isfinite(m.tau_l_ps) ? 2.0 / m.tau_l_ps : 0.0;

    auto route_eng = keyed_engine(cfg.seed, StreamTag::routing, 0);
    auto bridge_eng = keyed_engine(cfg.seed, StreamTag::phase_bridge, 0);
    std::normal_distribution<double> normal;

    ClickStreams out;
    std::size_t li = 0, si = 0;
    // Last point where the walk W = phase - detuning is known; W(0) = 0.
    double t_known = 0, w_known = 0;
    while (li < laser.size() || si < sp.size()) {
        const bool take_laser = si == sp.size() || (li < laser.size() && laser[li].t_ps <= sp[si].t_ps);
        const Timestamp t = take_laser ? laser[li].t_ps : sp[si].t_ps;
        double laser_phase;
        if (take_laser) {
            laser_phase = laser[li].phase_rad;
            t_known = static_cast<double>(t);
            w_known = laser_phase - detuning_phase(m.delta_f_hz, t);
            ++li;
        } else {
            const double s = static_cast<double>(t);
            double w;
            if (s == t_known || diffusion == 0) {
                w = w_known;
            } else if (li < laser.size()) {
                // Brownian bridge towards the next laser sample.
                const double tb = static_cast<double>(laser[li].t_ps);
                const double wb = laser[li].phase_rad - detuning_phase(m.delta_f_hz, laser[li].t_ps);
                const double frac = (s - t_known) / (tb - t_known);
                const double var = diffusion * (s - t_known) * (tb - s) / (tb - t_known);
                w = w_known + frac * (wb - w_known) + std::sqrt(var) * normal(bridge_eng);
            } else {
                w = w_known + std::sqrt(diffusion * (s - t_known)) * normal(bridge_eng);
            }
            t_known = s;
            w_known = w;
            laser_phase = detuning_phase(m.delta_f_hz, t) + w;
            ++si;
        }
        const double p_first = 0.5 * (1 + contrast * std::cos(laser_phase));
        const int port = uniform_open(route_eng) < p_first ? 0 : 1;
        emit(out, port, cfg.same_port_hbt, t, route_eng);
    }
    return out;
}

ClickStreams sample_kernel_engine(std::span<const PhotonEvent> laser, std::span<const PhotonEvent> sp,
                                  const InterferometerConfig& cfg) {
    cfg.validate();
    require_sorted(laser, "laser");
    require_sorted(sp, "single-photon");
    const auto& m = cfg.model;
    const double window = kKernelWindowTauL * m.tau_l_ps;

    auto laser_eng = keyed_engine(cfg.seed, StreamTag::routing, 0);
    auto sp_eng = keyed_engine(cfg.seed, StreamTag::routing, 1);
    auto split_eng = keyed_engine(cfg.seed, StreamTag::routing, 2);

    std::vector<std::uint8_t> laser_port(laser.size());
    for (auto& p : laser_port) p = uniform_open(laser_eng) < 0.5 ? 0 : 1;

    // A laser photon at delay tau is the nearest one with probability
    // exp(-2 rate |tau|); the kernel is scaled up by the inverse.
    double rate_per_ps = 0;
    if (laser.size() > 1 && laser.back().t_ps > laser.front().t_ps)
        rate_per_ps = static_cast<double>(laser.size() - 1) / static_cast<double>(laser.back().t_ps - laser.front().t_ps);
    bool clamped = false;

    std::vector<std::uint8_t> sp_port(sp.size());
    std::size_t next = 0; // first laser event with t >= current single photon
    for (std::size_t i = 0; i < sp.size(); ++i) {
        const Timestamp s = sp[i].t_ps;
        while (next < laser.size() && laser[next].t_ps < s) ++next;
        std::optional<std::size_t> nearest;
        double best = window;
        if (next > 0) {
            const double d = static_cast<double>(s - laser[next - 1].t_ps);
            if (d <= best) { best = d; nearest = next - 1; }
        }
        if (next < laser.size()) {
            const double d = static_cast<double>(laser[next].t_ps - s);
            if (d < best || (!nearest && d <= best)) { best = d; nearest = next; }
        }
        const double u = uniform_open(sp_eng);
        if (nearest && cfg.pol == Polarization::parallel) {
            const double tau = static_cast<double>(s) - static_cast<double>(laser[*nearest].t_ps);
            double k = kernel_coefficient(tau, m) * std::exp(2 * rate_per_ps * std::abs(tau));
            if (std::abs(k) > 1) {
                k = std::clamp(k, -1.0, 1.0);
                clamped = true;
            }
            const double p_same = 0.5 * (1 + k);
            const std::uint8_t lp = laser_port[*nearest];
            sp_port[i] = u < p_same ? lp : static_cast<std::uint8_t>(1 - lp);
        } else {
            sp_port[i] = u < 0.5 ? 0 : 1;
        }
    }

    if (clamped) warn("laser rate too high for the coherence time: kernel engine pair statistics are biased");

    ClickStreams out;
    std::size_t li = 0, si = 0;
    while (li < laser.size() || si < sp.size()) {
        const bool take_laser = si == sp.size() || (li < laser.size() && laser[li].t_ps <= sp[si].t_ps);
        if (take_laser) {
            emit(out, laser_port[li], cfg.same_port_hbt, laser[li].t_ps, split_eng);
            ++li;
        } else {
            emit(out, sp_port[si], cfg.same_port_hbt, sp[si].t_ps, split_eng);
            ++si;
        }
    }
    return out;
}

ClickStreams interfere(std::span<const PhotonEvent> laser, std::span<const PhotonEvent> sp,
                       const InterferometerConfig& cfg) {
    return cfg.engine == Engine::routing ? route_phase_engine(laser, sp, cfg)
                                         : sample_kernel_engine(laser, sp, cfg);
}

std::vector<Timestamp> apply_detector_effects(std::span<const Timestamp> clicks, const DetectorConfig& det,
                                              Channel channel, Timestamp span_ps) {
    det.validate();
    for (std::size_t i = 1; i < clicks.size(); ++i) {
        if (clicks[i] < clicks[i - 1]) throw ValidationError("clicks are not sorted by time");
    }
    const auto ch = static_cast<std::uint64_t>(channel);
    auto eng = keyed_engine(det.seed, StreamTag::detector, ch);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<Timestamp> kept;
    kept.reserve(clicks.size());
    for (const Timestamp t : clicks) {
        if (det.efficiency < 1 && !(uniform_open(eng) < det.efficiency)) continue;
        if (det.jitter_sigma_ps > 0) {
            const double shifted = static_cast<double>(t) + det.jitter_sigma_ps * normal(eng);
            kept.push_back(shifted <= 0 ? 0 : static_cast<Timestamp>(std::llround(shifted)));
        } else {
            kept.push_back(t);
        }
    }
    if (det.dark_rate_hz > 0 && span_ps > 0) {
        auto dark = keyed_engine(det.seed, StreamTag::dark_counts, ch);
        const double rate_per_ps = det.dark_rate_hz / kPicosecondsPerSecond;
        const double span = static_cast<double>(span_ps);
        for (double t = -std::log(uniform_open(dark)) / rate_per_ps; t < span;
             t += -std::log(uniform_open(dark)) / rate_per_ps) {
            kept.push_back(static_cast<Timestamp>(t));
        }
    }
    if (det.jitter_sigma_ps > 0 || det.dark_rate_hz > 0) std::sort(kept.begin(), kept.end());

    std::vector<Timestamp> out;
    out.reserve(kept.size());
    for (const Timestamp t : kept) {
        if (!out.empty() && (t == out.back() || static_cast<double>(t - out.back()) < det.dead_time_ps)) continue;
        out.push_back(t);
    }
    return out;
}

ClickStreams apply_detector_effects(const ClickStreams& clicks, const DetectorConfig& det, Timestamp span_ps) {
    return {apply_detector_effects(clicks.d1, det, Channel::d1, span_ps),
            apply_detector_effects(clicks.d2, det, Channel::d2, span_ps)};
}

std::vector<ClickRecord> to_records(const ClickStreams& clicks) {
    std::vector<ClickRecord> out;
    out.reserve(clicks.d1.size() + clicks.d2.size());
    std::size_t i = 0, j = 0;
    while (i < clicks.d1.size() || j < clicks.d2.size()) {
        if (j == clicks.d2.size() || (i < clicks.d1.size() && clicks.d1[i] <= clicks.d2[j])) {
            out.push_back({clicks.d1[i++], Channel::d1});
        } else {
            out.push_back({clicks.d2[j++], Channel::d2});
        }
    }
    return out;
}

ClickStreams from_records(std::span<const ClickRecord> records) {
    ClickStreams out;
    for (const auto& r : records) out[r.channel].push_back(r.t_ps);
    return out;
}

} // namespace homsim::interfere
