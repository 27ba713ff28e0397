#pragma once

#include "homsim/analysis.hpp"
#include "homsim/correlator.hpp"
#include "homsim/interfere.hpp"
#include "homsim/synth.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace homsim::pipeline {

struct CorrelatorSettings {
    std::int64_t bin_width_ps = 10;
    std::int64_t tau_max_ps = 2000;
    /// Chunk length for chunked correlation; 0 correlates in one pass.
    Timestamp chunk_ps = 0;
};

struct FitSettings {
    model::ModelParams init;
    analysis::FreeMask free = analysis::kDefaultFreeMask;
};

struct OutputPaths {
    std::string ptt;
    std::string manifest;
};

/// Everything one simulate / correlate / fit run needs. The interferometer's
/// model parameters are derived: eta from the synth rate ratio and the source
/// coherence parameters from the synth section.
struct PipelineConfig {
    std::uint64_t seed = 1;
    synth::SynthConfig synth;
    interfere::InterferometerConfig interferometer;
    interfere::DetectorConfig detector;
    CorrelatorSettings correlator;
    FitSettings fit;
    OutputPaths output;

    void validate() const;
};

/// Seed used when a config does not set one: HOMSIM_SEED if present, else 1.
std::uint64_t default_seed();

/// Parse a JSON config document. Durations accept numbers (ps) or strings
/// with ps/ns/us/ms/s suffixes, frequencies numbers (Hz) or Hz/kHz/MHz/GHz.
/// Throws ValidationError on any invalid or inconsistent field.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::string& path);

/// Mask with exactly the named parameters free (names as in analysis::kParamNames).
analysis::FreeMask parse_free_mask(const std::vector<std::string>& names);

/// Fit initial values and free mask from JSON: either {"init": {...}, "free": [...]}
/// or the parameters at top level with an optional "free" list.
FitSettings parse_fit_settings(const std::string& json_text, const model::ModelParams& defaults = {});

/// Per-module seeds for independent realization `index` (0 keeps cfg.seed).
std::uint64_t realization_seed(std::uint64_t seed, std::uint64_t index);

struct RunResult {
    std::uint64_t seed = 0;
    std::size_t laser_photons = 0;
    std::size_t sp_photons = 0;
    interfere::ClickStreams clicks;
    Timestamp duration_ps = 0;
};

/// synth -> interfere -> detector effects for one realization.
RunResult run(const PipelineConfig& cfg, std::uint64_t realization = 0);

/// Run manifest as a JSON document (deterministic for a given config).
std::string manifest_json(const PipelineConfig& cfg, const RunResult& run);

/// Normalized D1 x D2 cross-correlation with the config's binning.
correlator::CorrelationHistogram correlate_clicks(const interfere::ClickStreams& clicks,
                                                  const CorrelatorSettings& settings, Timestamp duration_ps);

/// Same source and detector settings, opposite polarization.
PipelineConfig with_polarization(PipelineConfig cfg, interfere::Polarization pol);

} // namespace homsim::pipeline
