#pragma once

// Independent oracles for the test suite. These deliberately avoid the
// library's solvers: the regression oracle assembles normal equations with
// plain loops and Gauss-Jordan elimination, integration is adaptive Simpson,
// and moments are textbook two-pass sums.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracles {

/// Solve (D'D) beta = D'y for D = [1 X] by Gauss-Jordan with partial
/// pivoting. Returns [intercept, slopes...].
inline std::vector<double> ols_normal_equations(const std::vector<double>& y,
                                                const std::vector<std::vector<double>>& X) {
    const std::size_t n = y.size();
    const std::size_t k = X.size();  // predictors, column-major
    const std::size_t m = k + 1;

    std::vector<std::vector<double>> dtd(m, std::vector<double>(m, 0.0));
    std::vector<double> dty(m, 0.0);
    const auto d = [&](std::size_t row, std::size_t col) {
        return col == 0 ? 1.0 : X[col - 1][row];
    };
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += d(i, a) * d(i, b);
            dtd[a][b] = s;
        }
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += d(i, a) * y[i];
        dty[a] = s;
    }

    // augmented Gauss-Jordan
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::fabs(dtd[r][col]) > std::fabs(dtd[pivot][col])) pivot = r;
        if (std::fabs(dtd[pivot][col]) < 1e-12)
            throw std::runtime_error("oracle: singular normal equations");
        std::swap(dtd[col], dtd[pivot]);
        std::swap(dty[col], dty[pivot]);
        const double scale = dtd[col][col];
        for (std::size_t c = 0; c < m; ++c) dtd[col][c] /= scale;
        dty[col] /= scale;
        for (std::size_t r = 0; r < m; ++r) {
            if (r == col) continue;
            const double factor = dtd[r][col];
            if (factor == 0.0) continue;
            for (std::size_t c = 0; c < m; ++c) dtd[r][c] -= factor * dtd[col][c];
            dty[r] -= factor * dty[col];
        }
    }
    return dty;
}

inline double adaptive_simpson_step(const std::function<double(double)>& f, double a,
                                    double b, double fa, double fb, double fm, double whole,
                                    double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_step(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_step(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12, int depth = 60) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_step(f, a, b, fa, fb, fm, whole, tol, depth);
}

inline double two_pass_covariance(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (x[i] - mx) * (y[i] - my);
    return s / static_cast<double>(n - 1);
}

inline double excess_kurtosis(const std::vector<double>& v) {
    const auto n = static_cast<double>(v.size());
    double mean = 0.0;
    for (const double x : v) mean += x;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (const double x : v) {
        const double d = x - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    return m4 / (m2 * m2) - 3.0;
}

}  // namespace oracles
