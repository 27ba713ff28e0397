#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace homsim::analysis {

/// Residuals r(p) and, when `jac` is non-null, the Jacobian dr/dp.
using ResidualFn = std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac)>;

struct LsqOptions {
    int max_iter = 500;
    double rel_step_tol = 1e-8;
    double initial_lambda = 1e-3;
};

struct LsqResult {
    Eigen::VectorXd params;
    double cost = 0; ///< 0.5 * |r|^2 at params
    int n_iter = 0;
    bool converged = false;
    bool rank_deficient = false;
    std::string message;
    Eigen::MatrixXd jtj; ///< J^T J at params
    std::size_t n_residuals = 0;
    std::vector<double> accepted_costs; ///< cost after each accepted step
};

/// Box-constrained Levenberg-Marquardt with Marquardt diagonal scaling.
///
/// Steps are projected onto [lower, upper]. Converged when a step's largest
/// component relative to max(|p_i|, scale_i) drops below rel_step_tol.
LsqResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd p0, const Eigen::VectorXd& lower,
                              const Eigen::VectorXd& upper, const Eigen::VectorXd& scale,
                              const LsqOptions& opts = {});

/// Covariance estimate s^2 (J^T J)^+ with s^2 = 2 cost / (m - n); pseudo-inverse
/// over eigenvalues above a relative cutoff so the result stays positive semidefinite.
Eigen::MatrixXd covariance(const LsqResult& result);

} // namespace homsim::analysis
