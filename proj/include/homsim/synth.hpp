#pragma once

#include "homsim/units.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace homsim::synth {

enum class Source : std::uint8_t { laser = 0, sp = 1 };

/// One emitted photon. `phase_rad` is the total optical phase of the source
/// field at emission, measured in the single-photon frame: laser photons carry
/// 2 pi df t (mod 2 pi) plus the unwrapped phase-diffusion walk, single photons
/// carry the fixed phase 0.
struct PhotonEvent {
    Timestamp t_ps = 0;
    Source source = Source::laser;
    double phase_rad = 0;

    friend bool operator==(const PhotonEvent&, const PhotonEvent&) = default;
};

using EventStream = std::vector<PhotonEvent>;

struct SynthConfig {
    double rate_laser_hz = 4e4;
    double rate_sp_hz = 2e5;
    Timestamp duration_ps = 1'000'000'000'000; // 1 s
    double tau_l_ps = 150'000;
    double tau_c_ps = 115;
    double g2_sp0 = 0.03;
    double delta_f_hz = 0;
    std::uint64_t seed = 1;

    void validate() const;
    /// Relative pair-correlation bias of the thinned single-photon stream, O(rate tau_c).
    double sp_bias_bound() const;
};

/// Timestamps are produced in fixed spans so that each span owns one keyed
/// random stream; the span length is part of the seed-to-stream contract.
inline constexpr Timestamp kSynthSpanPs = 10'000'000'000; // 10 ms

/// Homogeneous Poisson laser photons carrying phase-diffusion phases.
EventStream gen_laser_events(const SynthConfig& cfg);

/// Laser phase at strictly increasing `times`: 2 pi df t + W(t), W a Wiener
/// walk started at W(0) = 0 with increment variance 2 dt / tau_l.
/// tau_l may be +inf (no diffusion).
std::vector<double> gen_laser_phase(std::span<const Timestamp> times, double tau_l_ps,
                                    double delta_f_hz, std::uint64_t seed);

/// Antibunched single photons: Poisson candidates at rate_sp_hz, each kept
/// with probability g2_sp(t - t_last_kept).
EventStream gen_sp_events(const SynthConfig& cfg);

/// Time-ordered merge; on equal timestamps laser events come first.
EventStream merge_streams(std::span<const PhotonEvent> laser, std::span<const PhotonEvent> sp);

std::vector<Timestamp> timestamps(std::span<const PhotonEvent> events);

} // namespace homsim::synth
