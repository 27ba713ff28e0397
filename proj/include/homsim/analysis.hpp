#pragma once

#include "homsim/correlator.hpp"
#include "homsim/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace homsim::analysis {

using correlator::CorrelationHistogram;
using model::ModelParams;

// ---------------------------------------------------------------------------
// Visibility

enum class VisibilityKind {
    hom,      ///< (g_perp - g_par) / g_perp, cross-port dip
    bunching, ///< (g_par - g_perp) / g_perp, same-port peak
};

struct VisibilityCurve {
    double bin_width_ps = 0;
    std::vector<double> tau_ps;
    std::vector<double> v;
    std::vector<double> sigma;
    std::vector<bool> valid; ///< false where masked
    bool all_masked = false;
};

/// Bins where g_perp < mask_sigmas * sigma_perp (or either sigma is undefined) are masked.
VisibilityCurve visibility_curve(const CorrelationHistogram& h_perp, const CorrelationHistogram& h_par,
                                 VisibilityKind kind = VisibilityKind::hom, double mask_sigmas = 10.0);

// ---------------------------------------------------------------------------
// Joint fit of the two polarization configurations

enum Param : std::size_t { kEta = 0, kV0, kTauL, kTauC, kG2Sp0, kDeltaF, kParamCount };

inline constexpr std::array<const char*, kParamCount> kParamNames{"eta", "v0", "tau_l_ps", "tau_c_ps", "g2_sp0",
                                                                  "delta_f_hz"};

using FreeMask = std::array<bool, kParamCount>;

/// eta is the measured intensity ratio and stays fixed by default: with both
/// correlations normalized to 1 at long delay, eta, v0 and g2_sp0 only enter
/// through two combinations and cannot all be free at once.
inline constexpr FreeMask kDefaultFreeMask{false, true, true, true, true, false};

struct FitOptions {
    /// Average the model over each bin (Gauss-Legendre) instead of sampling the bin center.
    bool bin_average = true;
    /// Fixed Gaussian timing jitter of the delay (both detectors combined)
    /// convolved into the single-photon dip.
    double jitter_sigma_ps = 0;
    int max_iter = 500;
    double rel_step_tol = 1e-8;
    /// Reweighting passes (weights from the model-predicted Poisson variance).
    int reweight_passes = 4;
};

struct FitResult {
    ModelParams params;
    std::array<double, kParamCount> stderr_{};
    double chi2_reduced = 0;
    bool converged = false;
    int n_iter = 0;
    /// kParamCount x kParamCount; rows and columns of frozen parameters are zero.
    Eigen::MatrixXd covariance;
    std::string message;
    FreeMask free{};
    std::vector<double> accepted_costs;
};

struct HistogramPair {
    CorrelationHistogram perp;
    CorrelationHistogram par;
};

FitResult fit_hom(const CorrelationHistogram& h_perp, const CorrelationHistogram& h_par, const ModelParams& init,
                  const FreeMask& free_mask = kDefaultFreeMask, const FitOptions& opts = {});
/// Joint fit over several histogram pairs (for instance a fine short-range and
/// a coarse long-range binning) sharing one parameter set.
FitResult fit_hom(std::span<const HistogramPair> pairs, const ModelParams& init,
                  const FreeMask& free_mask = kDefaultFreeMask, const FitOptions& opts = {});

/// Model values and parameter gradients at one delay.
struct ModelPoint {
    double perp = 0;
    double par = 0;
    std::array<double, kParamCount> d_perp{};
    std::array<double, kParamCount> d_par{};
};
ModelPoint hom_model_point(double tau_ps, const ModelParams& p, double jitter_sigma_ps = 0);

/// Exponential dip exp(-|tau|/tau_c) convolved with a zero-mean Gaussian of width sigma.
double jittered_dip(double tau_ps, double tau_c_ps, double sigma_ps);

// ---------------------------------------------------------------------------
// Single-photon antibunching

struct AntibunchingFit {
    double g2_0 = 0;
    double tau_c_ps = 0;
    double g2_0_stderr = 0;
    double tau_c_stderr = 0;
    double chi2_reduced = 0;
    bool converged = false;
};

/// Fit 1 - (1 - g2_0) exp(-|tau|/tau_c) to a normalized autocorrelation.
AntibunchingFit fit_antibunching(const CorrelationHistogram& hist, double g2_0_init = 0.1,
                                 double tau_c_init_ps = 100, const FitOptions& opts = {});

// ---------------------------------------------------------------------------
// Visibility envelope and beat

struct DampedCosine {
    double amplitude = 0;
    double decay_ps = 0;
    double frequency_hz = 0;
    double amplitude_stderr = 0;
    double decay_stderr = 0;
    double frequency_stderr = 0;
    double chi2_reduced = 0;
    bool converged = false;
};

/// Fit A exp(-|tau|/tau_d) cos(2 pi f tau) over valid bins with |tau| >= min_abs_tau_ps.
/// With fit_frequency false, f stays at frequency_init_hz.
DampedCosine fit_damped_cosine(const VisibilityCurve& curve, double min_abs_tau_ps, double frequency_init_hz,
                               bool fit_frequency, double decay_init_ps = 0);

struct BeatOptions {
    /// Exclude the single-photon region around zero delay.
    double min_abs_tau_ps = 0;
    /// Highest frequency expected in the data; must lie below the bin Nyquist limit.
    std::optional<double> max_frequency_hz;
};

struct BeatResult {
    bool detected = false;
    double delta_f_hz = 0;
    double stderr_hz = 0;
    DampedCosine fit;
};

/// Beat frequency of the visibility modulation. Throws ValidationError when
/// max_frequency_hz reaches the Nyquist limit of the binning.
BeatResult extract_beat(const VisibilityCurve& curve, const BeatOptions& opts = {});

// ---------------------------------------------------------------------------

struct EtaScanRow {
    double eta;
    double v_hom0;
    double background_peak;
};

std::vector<EtaScanRow> scan_eta(const ModelParams& model, std::span<const double> eta_grid);

} // namespace homsim::analysis
