#pragma once

#include "homsim/model.hpp"
#include "homsim/synth.hpp"
#include "homsim/units.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace homsim::interfere {

enum class Channel : std::uint8_t { d1 = 0, d2 = 1 };
enum class Polarization { parallel, perpendicular };
enum class Engine { routing, kernel };
enum class PairType { ll, ss, ls };

struct ClickRecord {
    Timestamp t_ps = 0;
    Channel channel = Channel::d1;

    friend bool operator==(const ClickRecord&, const ClickRecord&) = default;
};

/// Per-detector click timestamps, each sorted ascending.
struct ClickStreams {
    std::vector<Timestamp> d1;
    std::vector<Timestamp> d2;

    std::vector<Timestamp>& operator[](Channel c) { return c == Channel::d1 ? d1 : d2; }
    const std::vector<Timestamp>& operator[](Channel c) const { return c == Channel::d1 ? d1 : d2; }
};

struct InterferometerConfig {
    Polarization pol = Polarization::parallel;
    /// Both detectors behind one output port (HBT on a single port) instead of one per port.
    bool same_port_hbt = false;
    /// Field amplitude overlap for the routing engine; defaults to sqrt(model.v0).
    std::optional<double> amp_overlap;
    /// Allow amp_overlap^2 != model.v0.
    bool allow_overlap_mismatch = false;
    model::ModelParams model;
    Engine engine = Engine::kernel;
    std::uint64_t seed = 2;

    void validate() const;
    double effective_amp_overlap() const;
};

struct DetectorConfig {
    double jitter_sigma_ps = 0;
    double dead_time_ps = 0;
    double dark_rate_hz = 0;
    double efficiency = 1;
    std::uint64_t seed = 3;

    void validate() const;
};

/// Conditioning window of the kernel engine in units of tau_l.
inline constexpr double kKernelWindowTauL = 8.0;

/// Fringe contrast of the routing engine, 2 sqrt(eta) a / (1 + eta).
double routing_fringe_contrast(double eta, double amp_overlap);

/// Two-photon coincidence weight relative to distinguishable routing.
double pair_kernel(PairType type, Polarization pol, bool same_port, double tau_ps,
                   const model::ModelParams& m);

/// Semiclassical engine: every photon follows the instantaneous two-field
/// intensity split at its beam splitter output.
ClickStreams route_phase_engine(std::span<const synth::PhotonEvent> laser,
                                std::span<const synth::PhotonEvent> sp,
                                const InterferometerConfig& cfg);

/// Pair-kernel engine: each single photon is routed jointly with its nearest
/// laser photon (within kKernelWindowTauL * tau_l) so that the pair's output
/// distribution follows the two-photon kernel; everything else is 50/50.
ClickStreams sample_kernel_engine(std::span<const synth::PhotonEvent> laser,
                                  std::span<const synth::PhotonEvent> sp,
                                  const InterferometerConfig& cfg);

/// Dispatch on cfg.engine.
ClickStreams interfere(std::span<const synth::PhotonEvent> laser,
                       std::span<const synth::PhotonEvent> sp, const InterferometerConfig& cfg);

/// Efficiency, Gaussian jitter, dark counts over [0, span_ps), then
/// non-paralyzable dead time. Output strictly increasing.
std::vector<Timestamp> apply_detector_effects(std::span<const Timestamp> clicks,
                                              const DetectorConfig& det, Channel channel,
                                              Timestamp span_ps);
ClickStreams apply_detector_effects(const ClickStreams& clicks, const DetectorConfig& det,
                                    Timestamp span_ps);

/// Time-ordered records of both channels; D1 first on equal timestamps.
std::vector<ClickRecord> to_records(const ClickStreams& clicks);
ClickStreams from_records(std::span<const ClickRecord> records);

} // namespace homsim::interfere
