#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "pathmed/errors.hpp"
#include "pathmed/special_functions.hpp"

namespace pathmed {

/// One fitted least-squares equation. Coefficient vectors are laid out as
/// [intercept, slopes...]; slopes carry the predictor names.
struct OlsFit {
    double intercept = 0.0;
    std::vector<std::string> names;  // predictor names, aligned with slopes
    Eigen::VectorXd slopes;          // k
    Eigen::VectorXd se;              // k+1, intercept first
    Eigen::VectorXd residuals;       // n
    double sigma2 = 0.0;             // residual variance, divisor n-k-1
    Eigen::VectorXd t_stats;         // k+1
    Eigen::VectorXd p_values;        // k+1
    double r2 = 0.0;
    Eigen::Index df_resid = 0;

    int slope_index(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        throw missing_column(name);
    }
    double slope(const std::string& name) const { return slopes(slope_index(name)); }
    double slope_se(const std::string& name) const { return se(slope_index(name) + 1); }
    double slope_t(const std::string& name) const { return t_stats(slope_index(name) + 1); }
    double slope_p(const std::string& name) const { return p_values(slope_index(name) + 1); }
};

/// Least squares of y on X plus an intercept, solved by column-pivoted
/// Householder QR. Standard errors come from sigma2 * diag((X'X)^-1),
/// p-values from the Student-t distribution with n-k-1 degrees of freedom.
inline OlsFit ols_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                      const std::vector<std::string>& names) {
    const Eigen::Index n = y.size();
    const Eigen::Index k = X.cols();
    if (X.rows() != n) throw usage_error("ols_fit: y and X row counts differ");
    if (static_cast<Eigen::Index>(names.size()) != k)
        throw usage_error("ols_fit: one name per predictor column required");
    if (n < k + 2)
        throw too_few_rows("ols_fit: n=" + std::to_string(n) + " rows cannot fit " +
                           std::to_string(k) + " predictors plus an intercept");

    Eigen::MatrixXd D(n, k + 1);
    D.col(0).setOnes();
    D.rightCols(k) = X;

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
    const Eigen::MatrixXd R =
        qr.matrixR().topLeftCorner(k + 1, k + 1).template triangularView<Eigen::Upper>();
    const double r_max = std::abs(R(0, 0));
    const double r_min = std::abs(R(k, k));
    if (!(r_min > 1e-10 * r_max)) {
        std::ostringstream msg;
        msg << "ols_fit: design matrix is numerically singular (|R| diagonal ratio "
            << (r_max > 0 ? r_min / r_max : 0.0) << " below 1e-10)";
        throw rank_deficient(msg.str());
    }

    OlsFit fit;
    fit.names = names;
    const Eigen::VectorXd coef = qr.solve(y);
    fit.intercept = coef(0);
    fit.slopes = coef.tail(k);
    fit.residuals = y - D * coef;
    fit.df_resid = n - k - 1;

    const double rss = fit.residuals.squaredNorm();
    fit.sigma2 = rss / static_cast<double>(fit.df_resid);

    // (X'X)^-1 = P (R'R)^-1 P' with D*P = Q*R
    const Eigen::MatrixXd r_inv =
        R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k + 1, k + 1));
    Eigen::MatrixXd xtx_inv = r_inv * r_inv.transpose();
    xtx_inv = qr.colsPermutation() * xtx_inv * qr.colsPermutation().transpose();

    fit.se.resize(k + 1);
    fit.t_stats.resize(k + 1);
    fit.p_values.resize(k + 1);
    const double df = static_cast<double>(fit.df_resid);
    for (Eigen::Index j = 0; j <= k; ++j) {
        fit.se(j) = std::sqrt(std::max(0.0, fit.sigma2 * xtx_inv(j, j)));
        if (fit.se(j) == 0.0) {
            fit.t_stats(j) = coef(j) == 0.0 ? 0.0
                                            : std::copysign(
                                                  std::numeric_limits<double>::infinity(),
                                                  coef(j));
            fit.p_values(j) = coef(j) == 0.0 ? 1.0 : 0.0;
        } else {
            fit.t_stats(j) = coef(j) / fit.se(j);
            fit.p_values(j) = student_t_two_sided_p(fit.t_stats(j), df);
        }
    }

    const double tss = (y.array() - y.mean()).matrix().squaredNorm();
    if (tss > 0.0)
        fit.r2 = std::clamp(1.0 - rss / tss, 0.0, 1.0);
    else
        fit.r2 = rss <= 1e-24 ? 1.0 : 0.0;
    return fit;
}

}  // namespace pathmed
