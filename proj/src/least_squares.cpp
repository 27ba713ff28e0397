#include "homsim/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace homsim::analysis {

LsqResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd p, const Eigen::VectorXd& lower,
                              const Eigen::VectorXd& upper, const Eigen::VectorXd& scale,
                              const LsqOptions& opts) {
    const auto n = p.size();
    p = p.cwiseMax(lower).cwiseMin(upper);

    LsqResult res;
    Eigen::VectorXd r, r_new;
    Eigen::MatrixXd jac;
    fn(p, r, &jac);
    res.n_residuals = static_cast<std::size_t>(r.size());
    double cost = 0.5 * r.squaredNorm();
    if (!std::isfinite(cost)) {
        res.params = p;
        res.cost = cost;
        res.message = "non-finite residuals at the starting point";
        return res;
    }
    double lambda = opts.initial_lambda;

    auto rel_size = [&](const Eigen::VectorXd& step) {
        double m = 0;
        for (Eigen::Index i = 0; i < n; ++i) m = std::max(m, std::abs(step[i]) / std::max(std::abs(p[i]), scale[i]));
        return m;
    };

    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd grad = jac.transpose() * r;
    while (res.n_iter < opts.max_iter) {
        ++res.n_iter;
        Eigen::VectorXd diag = jtj.diagonal();
        if ((diag.array() <= 0).any()) {
            res.rank_deficient = true;
            res.message = "singular Jacobian: a parameter has no influence on the residuals";
            break;
        }
        Eigen::MatrixXd a = jtj;
        a.diagonal() += lambda * diag;
        const Eigen::VectorXd step = a.ldlt().solve(-grad);
        const Eigen::VectorXd p_new = (p + step).cwiseMax(lower).cwiseMin(upper);
        const Eigen::VectorXd taken = p_new - p;
        const double rel = rel_size(taken);

        fn(p_new, r_new, nullptr);
        const double cost_new = 0.5 * r_new.squaredNorm();
        if (std::isfinite(cost_new) && cost_new < cost) {
            p = p_new;
            cost = cost_new;
            r.swap(r_new);
            res.accepted_costs.push_back(cost);
            lambda = std::max(lambda / 3, 1e-15);
            fn(p, r, &jac);
            jtj = jac.transpose() * jac;
            grad = jac.transpose() * r;
            if (rel < opts.rel_step_tol) {
                res.converged = true;
                break;
            }
        } else {
            if (rel < opts.rel_step_tol) {
                // No representable improvement left at this resolution.
                res.converged = true;
                break;
            }
            lambda *= 4;
            if (lambda > 1e20) {
                res.message = "damping diverged without reducing the cost";
                break;
            }
        }
    }
    if (!res.converged && res.message.empty()) res.message = "iteration limit reached";

    // Rank check on the scaled normal matrix.
    Eigen::VectorXd d = jtj.diagonal().cwiseMax(std::numeric_limits<double>::min()).cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd scaled = d.asDiagonal() * jtj * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
    const double max_ev = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (max_ev > 0 && eig.eigenvalues().minCoeff() < 1e-10 * max_ev) {
        res.rank_deficient = true;
        if (res.message.empty()) res.message = "parameters not jointly identifiable (near-singular Jacobian)";
    }
    if (res.rank_deficient) res.converged = false;

    res.params = p;
    res.cost = cost;
    res.jtj = jtj;
    return res;
}

Eigen::MatrixXd covariance(const LsqResult& result) {
    const auto n = result.params.size();
    const double dof = static_cast<double>(result.n_residuals) - static_cast<double>(n);
    const double s2 = dof > 0 ? 2 * result.cost / dof : 0.0;
    // Pseudo-inverse in Jacobi-scaled coordinates so parameters of very
    // different magnitude are treated alike.
    const Eigen::VectorXd d =
        result.jtj.diagonal().cwiseMax(std::numeric_limits<double>::min()).cwiseSqrt().cwiseInverse();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d.asDiagonal() * result.jtj * d.asDiagonal());
    const auto& ev = eig.eigenvalues();
    const double cutoff = 1e-12 * std::max(0.0, ev.maxCoeff());
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (ev[i] > cutoff) inv[i] = 1.0 / ev[i];
    }
    const Eigen::MatrixXd scaled_inv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    return s2 * (d.asDiagonal() * scaled_inv * d.asDiagonal());
}

} // namespace homsim::analysis
