#include "homsim/model.hpp"

#include "homsim/errors.hpp"

#include <cmath>

namespace homsim::model {

void ModelParams::validate() const {
    if (!(eta >= 0) || !std::isfinite(eta)) throw DomainError("eta must be >= 0");
    if (!(v0 >= 0 && v0 <= 1)) throw DomainError("v0 must lie in [0, 1]");
    if (!(g2_sp0 >= 0 && g2_sp0 <= 1)) throw DomainError("g2_sp0 must lie in [0, 1]");
    if (!(tau_l_ps > 0)) throw DomainError("tau_l must be > 0");
    if (!(tau_c_ps > 0)) throw DomainError("tau_c must be > 0");
    if (!(r >= 0 && r <= 1 && t >= 0 && t <= 1)) throw DomainError("r and t must lie in [0, 1]");
    if (r + t > 1 + 1e-12) throw DomainError("r + t must not exceed 1");
    if (!std::isfinite(delta_f_hz)) throw DomainError("delta_f must be finite");
}

double g1_envelope(double tau_ps, double tau_l_ps) {
    if (!(tau_l_ps > 0)) throw DomainError("tau_l must be > 0");
    return std::exp(-std::abs(tau_ps) / tau_l_ps);
}

double g2_sp(double tau_ps, double g2_sp0, double tau_c_ps) {
    if (!(tau_c_ps > 0)) throw DomainError("tau_c must be > 0");
    return 1.0 - (1.0 - g2_sp0) * std::exp(-std::abs(tau_ps) / tau_c_ps);
}

double normalization(const ModelParams& p) {
    const double n = (1 + p.eta * p.eta) * p.r * p.t + p.eta * (p.r * p.r + p.t * p.t);
    if (!(n > 0)) throw DomainError("degenerate normalization (eta = 0 and r t = 0)");
    return n;
}

namespace {

double beat(double tau_ps, double delta_f_hz) {
    return std::cos(kTwoPi * delta_f_hz * (std::abs(tau_ps) / kPicosecondsPerSecond));
}

double perp_numerator(double tau_ps, const ModelParams& p) {
    const double rt = p.r * p.t;
    return p.eta * p.eta * rt + rt * g2_sp(tau_ps, p.g2_sp0, p.tau_c_ps) +
           p.eta * (p.r * p.r + p.t * p.t);
}

} // namespace

double interference_term(double tau_ps, const ModelParams& p) {
    return 2 * p.eta * p.r * p.t * p.v0 * g1_envelope(tau_ps, p.tau_l_ps) *
           beat(tau_ps, p.delta_f_hz) / normalization(p);
}

double g2_cross_perp(double tau_ps, const ModelParams& p) {
    return perp_numerator(tau_ps, p) / normalization(p);
}

double g2_cross_par(double tau_ps, const ModelParams& p) {
    return g2_cross_perp(tau_ps, p) - interference_term(tau_ps, p);
}

double v_hom_closed_form(double tau_ps, const ModelParams& p) {
    const double den = p.eta * p.eta + 2 * p.eta + g2_sp(tau_ps, p.g2_sp0, p.tau_c_ps);
    if (den == 0) throw DomainError("visibility undefined: zero cross-correlation");
    return 2 * p.eta * p.v0 * g1_envelope(tau_ps, p.tau_l_ps) * beat(tau_ps, p.delta_f_hz) / den;
}

double v_hom(double tau_ps, const ModelParams& p) {
    if (p.balanced()) return v_hom_closed_form(tau_ps, p);
    const double perp = g2_cross_perp(tau_ps, p);
    if (perp == 0) throw DomainError("visibility undefined: zero cross-correlation");
    return (perp - g2_cross_par(tau_ps, p)) / perp;
}

double g2_auto_perp(double tau_ps, const ModelParams& p) { return g2_cross_perp(tau_ps, p); }

double g2_auto_par(double tau_ps, const ModelParams& p) {
    return g2_cross_perp(tau_ps, p) + interference_term(tau_ps, p);
}

double v_same_port(double tau_ps, const ModelParams& p) {
    const double perp = g2_auto_perp(tau_ps, p);
    if (perp == 0) throw DomainError("visibility undefined: zero correlation");
    return (g2_auto_par(tau_ps, p) - perp) / perp;
}

double optimal_eta(double g2_sp0) {
    if (!(g2_sp0 >= 0 && g2_sp0 <= 1)) throw DomainError("g2_sp0 must lie in [0, 1]");
    return std::sqrt(g2_sp0);
}

double background_peak(double eta, double v0) {
    if (!(eta >= 0)) throw DomainError("eta must be >= 0");
    if (!(v0 >= 0 && v0 <= 1)) throw DomainError("v0 must lie in [0, 1]");
    return 2 * eta * v0 / ((1 + eta) * (1 + eta));
}

CqedFigures cqed_figures(const CqedParams& c) {
    if (c.g_ghz < 0 || c.kappa_ghz < 0 || c.gamma_par_ghz < 0 || c.gamma_star_ghz < 0)
        throw DomainError("CQED rates must be >= 0");
    const double gamma_perp = c.gamma_perp_ghz();
    const double g2 = c.g_ghz * c.g_ghz;
    if (c.kappa_ghz * gamma_perp == 0 || g2 == 0) throw DomainError("zero CQED denominator");
    return {2 * g2 / (c.kappa_ghz * gamma_perp), gamma_perp * c.gamma_par_ghz / (4 * g2)};
}

} // namespace homsim::model
