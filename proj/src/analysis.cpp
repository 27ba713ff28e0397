#include "homsim/analysis.hpp"

#include "homsim/errors.hpp"
#include "homsim/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace homsim::analysis {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// 8-point Gauss-Legendre rule on [-1, 1].
constexpr std::array<double, 8> kGlNodes{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                         -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                         0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                           0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                           0.2223810344533745, 0.1012285362903763};

/// Quadrature nodes (tau, weight) whose weights sum to 1 over [lo, hi), split at 0.
std::vector<std::pair<double, double>> bin_nodes(double lo, double hi, bool average) {
    std::vector<std::pair<double, double>> out;
    if (!average) {
        out.emplace_back(0.5 * (lo + hi), 1.0);
        return out;
    }
    const double width = hi - lo;
    auto add = [&](double a, double b) {
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (std::size_t i = 0; i < kGlNodes.size(); ++i) out.emplace_back(mid + half * kGlNodes[i], kGlWeights[i] * half / width);
    };
    if (lo < 0 && hi > 0) {
        add(lo, 0);
        add(0, hi);
    } else {
        add(lo, hi);
    }
    return out;
}

double log_erfc(double z) {
    if (z < 25) return std::log(std::erfc(z));
    const double z2 = z * z;
    return -z2 - std::log(z * std::sqrt(std::numbers::pi)) + std::log1p(-0.5 / z2 + 0.75 / (z2 * z2));
}

/// g2 variance per unit g2 for each bin: var(g2_k) = model_k * scale_k.
std::vector<double> count_scale(const CorrelationHistogram& h) {
    const std::size_t n = h.n_bins();
    std::vector<double> s(n, kNaN);
    if (h.n_a > 0 && h.n_b > 0 && h.duration_ps > 0) {
        const double t = h.duration_ps;
        for (std::size_t k = 0; k < n; ++k) {
            s[k] = t * t /
                   (static_cast<double>(h.n_a) * static_cast<double>(h.n_b) * static_cast<double>(h.bin_width_ps) *
                    (t - std::abs(h.bin_center(k))));
        }
        return s;
    }
    // Histograms read back from CSV: recover g2 per count where counts exist
    // and interpolate across empty bins.
    const auto& norm = *h.normalized;
    std::vector<std::size_t> known;
    for (std::size_t k = 0; k < n; ++k) {
        if (h.counts[k] > 0 && std::isfinite(norm[k].g2)) {
            s[k] = norm[k].g2 / static_cast<double>(h.counts[k]);
            known.push_back(k);
        }
    }
    if (known.empty()) throw ValidationError("histogram holds no counts");
    std::size_t next = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (!std::isnan(s[k])) continue;
        while (next < known.size() && known[next] < k) ++next;
        if (next == 0) {
            s[k] = s[known.front()];
        } else if (next == known.size()) {
            s[k] = s[known.back()];
        } else {
            const std::size_t a = known[next - 1], b = known[next];
            const double f = static_cast<double>(k - a) / static_cast<double>(b - a);
            s[k] = s[a] + f * (s[b] - s[a]);
        }
    }
    return s;
}

struct DataPoint {
    double lo, hi;
    double g2;
    double scale;
    int series;
};

void append_points(std::vector<DataPoint>& pts, const CorrelationHistogram& h, int series) {
    if (!h.normalized) throw ValidationError("histogram must be normalized before fitting");
    const auto scale = count_scale(h);
    for (std::size_t k = 0; k < h.n_bins(); ++k) {
        const double g2 = (*h.normalized)[k].g2;
        if (!std::isfinite(g2)) continue;
        pts.push_back({static_cast<double>(h.bin_lo(k)), static_cast<double>(h.bin_lo(k) + h.bin_width_ps), g2,
                       scale[k], series});
    }
}

/// Point model: value and gradient with respect to the full parameter vector.
using PointModel = std::function<double(double tau, int series, const Eigen::VectorXd& p, Eigen::VectorXd* grad)>;

struct BinnedFitResult {
    LsqResult lsq;
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance; // full size, zeros for frozen
    double chi2_reduced = 0;
    int n_iter = 0;
};

/// Iteratively reweighted least squares of bin-integrated models against
/// normalized histogram bins.
BinnedFitResult binned_fit(const std::vector<DataPoint>& pts, const PointModel& model, Eigen::VectorXd full,
                           const std::vector<bool>& free, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const Eigen::VectorXd& scale, const FitOptions& opts) {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < free.size(); ++i) {
        if (free[i]) idx.push_back(static_cast<Eigen::Index>(i));
    }
    const auto nf = static_cast<Eigen::Index>(idx.size());
    if (nf == 0) throw ValidationError("no free parameters");
    if (pts.size() < 3 * idx.size()) throw ValidationError("too few bins for the number of free parameters");

    std::vector<std::vector<std::pair<double, double>>> nodes(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) nodes[k] = bin_nodes(pts[k].lo, pts[k].hi, opts.bin_average);

    const auto np = full.size();
    auto bin_model = [&](std::size_t k, const Eigen::VectorXd& p, Eigen::VectorXd* grad) {
        double v = 0;
        Eigen::VectorXd g(np);
        if (grad) grad->setZero(np);
        for (const auto& [tau, w] : nodes[k]) {
            v += w * model(tau, pts[k].series, p, grad ? &g : nullptr);
            if (grad) *grad += w * g;
        }
        return v;
    };

    auto expand = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd p = full;
        for (Eigen::Index i = 0; i < nf; ++i) p[idx[static_cast<std::size_t>(i)]] = x[i];
        return p;
    };
    Eigen::VectorXd x(nf), lo(nf), hi(nf), sc(nf);
    for (Eigen::Index i = 0; i < nf; ++i) {
        const auto j = idx[static_cast<std::size_t>(i)];
        x[i] = full[j];
        lo[i] = lower[j];
        hi[i] = upper[j];
        sc[i] = scale[j];
    }

    BinnedFitResult out;
    std::vector<double> inv_sigma(pts.size());
    LsqOptions lsq_opts;
    lsq_opts.max_iter = opts.max_iter;
    lsq_opts.rel_step_tol = opts.rel_step_tol;
    const int passes = std::max(1, opts.reweight_passes);
    for (int pass = 0; pass < passes; ++pass) {
        const Eigen::VectorXd p_now = expand(x);
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const double m = std::max(bin_model(k, p_now, nullptr), 1e-6);
            inv_sigma[k] = 1.0 / std::sqrt(m * pts[k].scale);
        }
        ResidualFn fn = [&](const Eigen::VectorXd& xv, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
            const Eigen::VectorXd p = expand(xv);
            r.resize(static_cast<Eigen::Index>(pts.size()));
            if (jac) jac->resize(static_cast<Eigen::Index>(pts.size()), nf);
            Eigen::VectorXd g;
            for (std::size_t k = 0; k < pts.size(); ++k) {
                const auto row = static_cast<Eigen::Index>(k);
                const double m = bin_model(k, p, jac ? &g : nullptr);
                r[row] = (m - pts[k].g2) * inv_sigma[k];
                if (jac) {
                    for (Eigen::Index i = 0; i < nf; ++i) (*jac)(row, i) = g[idx[static_cast<std::size_t>(i)]] * inv_sigma[k];
                }
            }
        };
        const Eigen::VectorXd before = x;
        out.lsq = levenberg_marquardt(fn, x, lo, hi, sc, lsq_opts);
        out.n_iter += out.lsq.n_iter;
        x = out.lsq.params;
        double change = 0;
        for (Eigen::Index i = 0; i < nf; ++i) change = std::max(change, std::abs(x[i] - before[i]) / std::max(std::abs(x[i]), sc[i]));
        if (pass > 0 && change < 1e-7) break;
    }

    out.params = expand(x);
    const Eigen::MatrixXd cov_free = covariance(out.lsq);
    out.covariance = Eigen::MatrixXd::Zero(np, np);
    for (Eigen::Index i = 0; i < nf; ++i) {
        for (Eigen::Index j = 0; j < nf; ++j) out.covariance(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]) = cov_free(i, j);
    }
    const double dof = static_cast<double>(pts.size()) - static_cast<double>(nf);
    out.chi2_reduced = dof > 0 ? 2 * out.lsq.cost / dof : 0.0;
    return out;
}

Eigen::VectorXd to_vector(const ModelParams& p) {
    Eigen::VectorXd v(kParamCount);
    v << p.eta, p.v0, p.tau_l_ps, p.tau_c_ps, p.g2_sp0, p.delta_f_hz;
    return v;
}

ModelParams from_vector(const Eigen::VectorXd& v, ModelParams base) {
    base.eta = v[kEta];
    base.v0 = v[kV0];
    base.tau_l_ps = v[kTauL];
    base.tau_c_ps = v[kTauC];
    base.g2_sp0 = v[kG2Sp0];
    base.delta_f_hz = v[kDeltaF];
    return base;
}

} // namespace

// ---------------------------------------------------------------------------

VisibilityCurve visibility_curve(const CorrelationHistogram& h_perp, const CorrelationHistogram& h_par,
                                 VisibilityKind kind, double mask_sigmas) {
    if (!h_perp.same_binning(h_par)) throw ValidationError("visibility needs histograms with identical binning");
    if (!h_perp.normalized || !h_par.normalized) throw ValidationError("visibility needs normalized histograms");
    VisibilityCurve c;
    c.bin_width_ps = static_cast<double>(h_perp.bin_width_ps);
    const std::size_t n = h_perp.n_bins();
    c.tau_ps.resize(n);
    c.v.assign(n, kNaN);
    c.sigma.assign(n, kNaN);
    c.valid.assign(n, false);
    std::size_t n_valid = 0;
    for (std::size_t k = 0; k < n; ++k) {
        c.tau_ps[k] = h_perp.bin_center(k);
        const auto [gp, sp] = (*h_perp.normalized)[k];
        const auto [gq, sq] = (*h_par.normalized)[k];
        if (!std::isfinite(sp) || !std::isfinite(sq) || !(gp > 0) || gp < mask_sigmas * sp) continue;
        const double diff = kind == VisibilityKind::hom ? gp - gq : gq - gp;
        c.v[k] = diff / gp;
        c.sigma[k] = std::hypot(sq / gp, gq * sp / (gp * gp));
        c.valid[k] = true;
        ++n_valid;
    }
    c.all_masked = n_valid == 0;
    return c;
}

// ---------------------------------------------------------------------------

double jittered_dip(double tau_ps, double tau_c_ps, double sigma_ps) {
    const double x = std::abs(tau_ps) / tau_c_ps;
    if (sigma_ps <= 0) return std::exp(-x);
    const double s = sigma_ps / tau_c_ps;
    const double h = 0.5 * s * s;
    const double z1 = (s * s - x) / (s * std::numbers::sqrt2);
    const double z2 = (s * s + x) / (s * std::numbers::sqrt2);
    const double t1 = std::exp(h - x + log_erfc(z1));
    const double t2 = std::exp(h + x + log_erfc(z2));
    return 0.5 * (t1 + t2);
}

ModelPoint hom_model_point(double tau_ps, const ModelParams& p, double jitter_sigma_ps) {
    ModelPoint out;
    const double at = std::abs(tau_ps);
    const double rt = p.r * p.t;
    const double s2 = p.r * p.r + p.t * p.t;
    const double n = model::normalization(p);
    const double dn_deta = 2 * p.eta * rt + s2;

    const double dip = jittered_dip(tau_ps, p.tau_c_ps, jitter_sigma_ps);
    double ddip_dtauc;
    if (jitter_sigma_ps > 0) {
        const double h = 1e-5 * p.tau_c_ps;
        ddip_dtauc = (jittered_dip(tau_ps, p.tau_c_ps + h, jitter_sigma_ps) -
                      jittered_dip(tau_ps, p.tau_c_ps - h, jitter_sigma_ps)) / (2 * h);
    } else {
        ddip_dtauc = dip * at / (p.tau_c_ps * p.tau_c_ps);
    }
    const double g2sp = 1 - (1 - p.g2_sp0) * dip;
    const double num = p.eta * p.eta * rt + rt * g2sp + p.eta * s2;
    out.perp = num / n;
    out.d_perp[kEta] = dn_deta / n - num * dn_deta / (n * n);
    out.d_perp[kG2Sp0] = rt * dip / n;
    out.d_perp[kTauC] = -rt * (1 - p.g2_sp0) * ddip_dtauc / n;

    const double env = std::exp(-at / p.tau_l_ps);
    const double phase = kTwoPi * p.delta_f_hz * at / kPicosecondsPerSecond;
    const double c = std::cos(phase);
    const double term = 2 * p.eta * rt * p.v0 * env * c; // before dividing by N
    out.par = out.perp - term / n;
    std::array<double, kParamCount> d_int{};
    d_int[kEta] = 2 * rt * p.v0 * env * c / n - term * dn_deta / (n * n);
    d_int[kV0] = 2 * p.eta * rt * env * c / n;
    d_int[kTauL] = 2 * p.eta * rt * p.v0 * c * env * at / (p.tau_l_ps * p.tau_l_ps) / n;
    d_int[kDeltaF] = -2 * p.eta * rt * p.v0 * env * std::sin(phase) * kTwoPi * at / kPicosecondsPerSecond / n;
    for (std::size_t i = 0; i < kParamCount; ++i) out.d_par[i] = out.d_perp[i] - d_int[i];
    return out;
}

FitResult fit_hom(const CorrelationHistogram& h_perp, const CorrelationHistogram& h_par, const ModelParams& init,
                  const FreeMask& free_mask, const FitOptions& opts) {
    const HistogramPair pair{h_perp, h_par};
    return fit_hom(std::span<const HistogramPair>(&pair, 1), init, free_mask, opts);
}

FitResult fit_hom(std::span<const HistogramPair> pairs, const ModelParams& init, const FreeMask& free_mask,
                  const FitOptions& opts) {
    init.validate();
    if (pairs.empty()) throw ValidationError("no histograms to fit");
    std::vector<DataPoint> pts;
    for (const auto& pr : pairs) {
        if (!pr.perp.same_binning(pr.par)) throw ValidationError("perpendicular and parallel histograms differ in binning");
        append_points(pts, pr.perp, 0);
        append_points(pts, pr.par, 1);
    }

    const double jitter = opts.jitter_sigma_ps;
    PointModel point = [&init, jitter](double tau, int series, const Eigen::VectorXd& p, Eigen::VectorXd* grad) {
        const auto mp = hom_model_point(tau, from_vector(p, init), jitter);
        const auto& d = series == 0 ? mp.d_perp : mp.d_par;
        if (grad) {
            grad->resize(kParamCount);
            for (std::size_t i = 0; i < kParamCount; ++i) (*grad)[static_cast<Eigen::Index>(i)] = d[i];
        }
        return series == 0 ? mp.perp : mp.par;
    };

    const double inf = std::numeric_limits<double>::infinity();
    Eigen::VectorXd lower(kParamCount), upper(kParamCount), scale(kParamCount);
    lower << 0, 0, 1e-6, 1e-6, 0, 0;
    upper << inf, 1, inf, inf, 1, inf;
    scale << 1e-3, 1e-3, 1.0, 1e-3, 1e-4, 1.0;
    Eigen::VectorXd p0 = to_vector(init);
    p0[kDeltaF] = std::abs(p0[kDeltaF]);

    const auto bf = binned_fit(pts, point, p0, std::vector<bool>(free_mask.begin(), free_mask.end()), lower, upper,
                               scale, opts);
    FitResult res;
    res.params = from_vector(bf.params, init);
    res.covariance = bf.covariance;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        res.stderr_[i] = std::sqrt(std::max(0.0, bf.covariance(ii, ii)));
    }
    res.chi2_reduced = bf.chi2_reduced;
    res.converged = bf.lsq.converged;
    res.n_iter = bf.n_iter;
    res.message = bf.lsq.converged ? "" : bf.lsq.message;
    res.free = free_mask;
    res.accepted_costs = bf.lsq.accepted_costs;
    return res;
}

AntibunchingFit fit_antibunching(const CorrelationHistogram& hist, double g2_0_init, double tau_c_init_ps,
                                 const FitOptions& opts) {
    std::vector<DataPoint> pts;
    append_points(pts, hist, 0);
    const double jitter = opts.jitter_sigma_ps;
    PointModel point = [jitter](double tau, int, const Eigen::VectorXd& p, Eigen::VectorXd* grad) {
        const double dip = jittered_dip(tau, p[1], jitter);
        if (grad) {
            grad->resize(2);
            (*grad)[0] = dip;
            double ddip;
            if (jitter > 0) {
                const double h = 1e-5 * p[1];
                ddip = (jittered_dip(tau, p[1] + h, jitter) - jittered_dip(tau, p[1] - h, jitter)) / (2 * h);
            } else {
                ddip = dip * std::abs(tau) / (p[1] * p[1]);
            }
            (*grad)[1] = -(1 - p[0]) * ddip;
        }
        return 1 - (1 - p[0]) * dip;
    };
    Eigen::VectorXd p0(2), lower(2), upper(2), scale(2);
    p0 << g2_0_init, tau_c_init_ps;
    lower << 0, 1e-6;
    upper << 1, std::numeric_limits<double>::infinity();
    scale << 1e-4, 1e-3;
    const auto bf = binned_fit(pts, point, p0, {true, true}, lower, upper, scale, opts);
    return {bf.params[0],
            bf.params[1],
            std::sqrt(std::max(0.0, bf.covariance(0, 0))),
            std::sqrt(std::max(0.0, bf.covariance(1, 1))),
            bf.chi2_reduced,
            bf.lsq.converged};
}

// ---------------------------------------------------------------------------

DampedCosine fit_damped_cosine(const VisibilityCurve& curve, double min_abs_tau_ps, double frequency_init_hz,
                               bool fit_frequency, double decay_init_ps) {
    std::vector<std::size_t> use;
    double span = 0;
    for (std::size_t k = 0; k < curve.tau_ps.size(); ++k) {
        if (!curve.valid[k] || std::abs(curve.tau_ps[k]) < min_abs_tau_ps || !(curve.sigma[k] > 0)) continue;
        use.push_back(k);
        span = std::max(span, std::abs(curve.tau_ps[k]));
    }
    const Eigen::Index nf = fit_frequency ? 3 : 2;
    if (use.size() < 3 * static_cast<std::size_t>(nf)) throw ValidationError("too few visibility bins to fit");

    auto eval = [&](const Eigen::VectorXd& p, std::size_t k, double* grad) {
        const double at = std::abs(curve.tau_ps[k]);
        const double f = fit_frequency ? p[2] : frequency_init_hz;
        const double env = std::exp(-at / p[1]);
        const double ph = kTwoPi * f * at / kPicosecondsPerSecond;
        const double c = std::cos(ph);
        if (grad) {
            grad[0] = env * c;
            grad[1] = p[0] * env * c * at / (p[1] * p[1]);
            if (fit_frequency) grad[2] = -p[0] * env * std::sin(ph) * kTwoPi * at / kPicosecondsPerSecond;
        }
        return p[0] * env * c;
    };
    ResidualFn fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        r.resize(static_cast<Eigen::Index>(use.size()));
        if (jac) jac->resize(r.size(), nf);
        double g[3];
        for (std::size_t i = 0; i < use.size(); ++i) {
            const std::size_t k = use[i];
            const auto row = static_cast<Eigen::Index>(i);
            r[row] = (eval(p, k, jac ? g : nullptr) - curve.v[k]) / curve.sigma[k];
            if (jac) {
                for (Eigen::Index j = 0; j < nf; ++j) (*jac)(row, j) = g[j] / curve.sigma[k];
            }
        }
    };

    const double tau_d0 = decay_init_ps > 0 ? decay_init_ps : span / 4;
    // Linear amplitude estimate for the starting envelope and frequency.
    double num = 0, den = 0;
    for (std::size_t k : use) {
        const double at = std::abs(curve.tau_ps[k]);
        const double b = std::exp(-at / tau_d0) * std::cos(kTwoPi * frequency_init_hz * at / kPicosecondsPerSecond);
        const double w = 1 / (curve.sigma[k] * curve.sigma[k]);
        num += w * b * curve.v[k];
        den += w * b * b;
    }
    const double inf = std::numeric_limits<double>::infinity();
    Eigen::VectorXd p0(nf), lo(nf), hi(nf), sc(nf);
    if (fit_frequency) {
        p0 << (den > 0 ? num / den : 0.1), tau_d0, frequency_init_hz;
        lo << -inf, 1e-3, 0;
        hi << inf, inf, inf;
        sc << 1e-6, 1.0, 1.0;
    } else {
        p0 << (den > 0 ? num / den : 0.1), tau_d0;
        lo << -inf, 1e-3;
        hi << inf, inf;
        sc << 1e-6, 1.0;
    }
    const auto res = levenberg_marquardt(fn, p0, lo, hi, sc);
    const auto cov = covariance(res);
    DampedCosine out;
    out.amplitude = res.params[0];
    out.decay_ps = res.params[1];
    out.frequency_hz = fit_frequency ? res.params[2] : frequency_init_hz;
    out.amplitude_stderr = std::sqrt(std::max(0.0, cov(0, 0)));
    out.decay_stderr = std::sqrt(std::max(0.0, cov(1, 1)));
    out.frequency_stderr = fit_frequency ? std::sqrt(std::max(0.0, cov(2, 2))) : 0.0;
    const double dof = static_cast<double>(use.size()) - static_cast<double>(nf);
    out.chi2_reduced = dof > 0 ? 2 * res.cost / dof : 0;
    out.converged = res.converged;
    return out;
}

BeatResult extract_beat(const VisibilityCurve& curve, const BeatOptions& opts) {
    if (!(curve.bin_width_ps > 0)) throw ValidationError("visibility curve has no binning");
    const double nyquist = kPicosecondsPerSecond / (2 * curve.bin_width_ps);
    if (opts.max_frequency_hz && *opts.max_frequency_hz >= nyquist)
        throw ValidationError("bin width too coarse: expected beat frequency reaches the Nyquist limit of " +
                              std::to_string(nyquist) + " Hz");
    const double f_max = opts.max_frequency_hz.value_or(0.9 * nyquist);

    std::vector<std::size_t> use;
    double span = 0;
    for (std::size_t k = 0; k < curve.tau_ps.size(); ++k) {
        if (!curve.valid[k] || std::abs(curve.tau_ps[k]) < opts.min_abs_tau_ps || !(curve.sigma[k] > 0)) continue;
        use.push_back(k);
        span = std::max(span, std::abs(curve.tau_ps[k]));
    }
    BeatResult out;
    if (use.size() < 9 || span <= 0) return out;

    // Weighted matched-filter periodogram.
    const double span_s = span / kPicosecondsPerSecond;
    const double df = 1 / (8 * span_s);
    double best_f = 0, best_p = -1;
    for (double f = 0; f <= f_max; f += df) {
        double num = 0, den = 0;
        for (std::size_t k : use) {
            const double c = std::cos(kTwoPi * f * std::abs(curve.tau_ps[k]) / kPicosecondsPerSecond);
            const double w = 1 / (curve.sigma[k] * curve.sigma[k]);
            num += w * c * curve.v[k];
            den += w * c * c;
        }
        const double power = den > 0 ? num * num / den : 0;
        if (power > best_p) {
            best_p = power;
            best_f = f;
        }
    }
    if (best_f * span_s < 1) {
        out.fit = fit_damped_cosine(curve, opts.min_abs_tau_ps, 0, false);
        return out;
    }
    out.fit = fit_damped_cosine(curve, opts.min_abs_tau_ps, best_f, true);
    const bool significant = std::abs(out.fit.amplitude) >= 2 * out.fit.amplitude_stderr;
    const bool enough_periods = out.fit.frequency_hz * span_s >= 3;
    if (significant && enough_periods && out.fit.converged) {
        out.detected = true;
        out.delta_f_hz = out.fit.frequency_hz;
        out.stderr_hz = out.fit.frequency_stderr;
    }
    return out;
}

std::vector<EtaScanRow> scan_eta(const ModelParams& m, std::span<const double> eta_grid) {
    if (eta_grid.empty()) throw ValidationError("eta grid is empty");
    std::vector<EtaScanRow> rows;
    rows.reserve(eta_grid.size());
    for (const double eta : eta_grid) {
        ModelParams p = m;
        p.eta = eta;
        p.validate();
        rows.push_back({eta, model::v_hom(0, p), model::background_peak(eta, p.v0)});
    }
    return rows;
}

} // namespace homsim::analysis
