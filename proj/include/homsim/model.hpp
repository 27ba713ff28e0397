#pragma once

#include "homsim/units.hpp"

namespace homsim::model {

/// Parameters of the laser + single-photon interference model.
///
/// Times are picoseconds and frequencies hertz. `r` and `t` are intensity
/// coefficients of the combining beam splitter; `r + t < 1` models loss.
struct ModelParams {
    double eta = 0.2;          ///< laser to single-photon intensity ratio
    double v0 = 0.85;          ///< mode overlap
    double r = 0.5;
    double t = 0.5;
    double tau_l_ps = 150'000; ///< laser (mutual) coherence time
    double tau_c_ps = 115;     ///< single-photon correlation time
    double g2_sp0 = 0.03;      ///< single-photon g2 at zero delay
    double delta_f_hz = 0;     ///< laser / single-photon detuning

    /// Throws DomainError when an invariant is violated.
    void validate() const;
    bool balanced() const { return r == 0.5 && t == 0.5; }
};

/// Emitter-cavity rates divided by 2pi, in GHz.
struct CqedParams {
    double g_ghz = 4.7;
    double kappa_ghz = 36.8;
    double gamma_par_ghz = 0.35;
    double gamma_star_ghz = 0.0;

    double gamma_perp_ghz() const { return gamma_par_ghz / 2 + gamma_star_ghz; }
};

struct CqedFigures {
    double cooperativity;
    double critical_photon_number;
};

/// |g1| envelope of the laser, exp(-|tau|/tau_l).
double g1_envelope(double tau_ps, double tau_l_ps);

/// Single-photon autocorrelation with an exponential recovery dip.
double g2_sp(double tau_ps, double g2_sp0, double tau_c_ps);

/// N = (1 + eta^2) r t + eta (r^2 + t^2).
double normalization(const ModelParams& p);

/// Interference term 2 eta r t v0 |g1_L(tau)| cos(2 pi df tau) / N shared by
/// the parallel-polarization correlations.
double interference_term(double tau_ps, const ModelParams& p);

/// Cross-port correlation with orthogonal polarizations (no interference).
double g2_cross_perp(double tau_ps, const ModelParams& p);
/// Cross-port correlation with parallel polarizations.
double g2_cross_par(double tau_ps, const ModelParams& p);

/// HOM visibility (g_perp - g_par) / g_perp. Uses the closed form when the
/// splitter is balanced and the definitional ratio otherwise.
double v_hom(double tau_ps, const ModelParams& p);
/// Closed form 2 eta v0 e^{-|tau|/tau_l} cos(2 pi df tau) / (eta^2 + 2 eta + g2_sp(tau)).
double v_hom_closed_form(double tau_ps, const ModelParams& p);

/// Same-output-port correlations measured by splitting one port onto two detectors.
double g2_auto_perp(double tau_ps, const ModelParams& p);
double g2_auto_par(double tau_ps, const ModelParams& p);
/// Bunching visibility (g_par - g_perp) / g_perp of the same-port correlations.
double v_same_port(double tau_ps, const ModelParams& p);

/// Intensity ratio maximizing v_hom(0): sqrt(g2_sp0).
double optimal_eta(double g2_sp0);

/// Peak of the broad visibility background, 2 eta v0 / (1 + eta)^2.
double background_peak(double eta, double v0);

CqedFigures cqed_figures(const CqedParams& c);

} // namespace homsim::model
