#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pathmed/data_io.hpp"
#include "pathmed/errors.hpp"
#include "pathmed/mediation.hpp"
#include "pathmed/rng.hpp"
#include "pathmed/special_functions.hpp"

// Standard error and confidence limits for the mediated effect beta3*betaM.
// Three constructions: normal theory (symmetric), nonparametric percentile
// bootstrap, and Monte Carlo quantiles of the product of two normals (both
// asymmetric in general).

namespace pathmed {

enum class CiMethod { Normal, Bootstrap, ProductDistribution };

inline const char* to_string(CiMethod m) {
    switch (m) {
        case CiMethod::Normal: return "Normal";
        case CiMethod::Bootstrap: return "Bootstrap";
        default: return "ProductDistribution";
    }
}

struct IntervalEstimate {
    double point = 0;
    double lower = 0;
    double upper = 0;
    double level = 0.95;
    CiMethod method = CiMethod::Normal;
    std::optional<double> se;
    struct Meta {
        std::uint64_t seed = 0;
        long replicates = 0;  // requested resamples or draws
        long used = 0;
        long skipped = 0;
    } meta;
};

/// First-order delta-method standard error of beta3*betaM:
/// sqrt(betaM^2 se3^2 + beta3^2 seM^2). With `exact_variance` the
/// second-order term se3^2 seM^2 is added (exact product-of-normals
/// variance), which is always at least as large.
inline double sobel_se(const MediationFit& fit, bool exact_variance = false) {
    const double v = fit.betaM * fit.betaM * fit.se3 * fit.se3 +
                     fit.beta3 * fit.beta3 * fit.seM * fit.seM +
                     (exact_variance ? fit.se3 * fit.se3 * fit.seM * fit.seM : 0.0);
    return std::sqrt(v);
}

struct SobelTest {
    double z = 0;
    double p = 1;
};

/// z = beta3*betaM / se, referred to the standard normal.
inline SobelTest sobel_test(const MediationFit& fit) {
    const double se = sobel_se(fit);
    if (se == 0.0) throw zero_se();
    SobelTest t;
    t.z = fit.beta3 * fit.betaM / se;
    t.p = norm_two_sided_p(t.z);
    return t;
}

/// Symmetric normal-theory limits: point +/- z_{1-w/2} * se.
inline IntervalEstimate normal_ci(double point, double se, double level) {
    if (!(level > 0.0 && level < 1.0)) throw invalid_level(level);
    if (se < 0.0) throw usage_error("normal_ci: se must be nonnegative");
    IntervalEstimate ci;
    ci.point = point;
    ci.level = level;
    ci.method = CiMethod::Normal;
    ci.se = se;
    const double half = z_critical(level) * se;
    ci.lower = point - half;
    ci.upper = point + half;
    return ci;
}

namespace detail {

// type-7 empirical quantile (linear interpolation) on a sorted vector
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (const double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Percentile bootstrap for beta3*betaM: case resampling of rows with
/// replacement, refitting eq2 and eq3 per resample. Resample b draws its
/// stream from (seed, b), so results do not depend on evaluation order.
inline IntervalEstimate bootstrap_ci(const Dataset& data, const std::string& x,
                                     const std::string& m, const std::string& y, long B,
                                     std::uint64_t seed, double level) {
    if (!(level > 0.0 && level < 1.0)) throw invalid_level(level);
    if (B < 100) throw too_few_replicates(B, 100);

    const Eigen::VectorXd xv = data.column(x);
    const Eigen::VectorXd mv = data.column(m);
    const Eigen::VectorXd yv = data.column(y);
    const Eigen::Index n = data.n();

    // full-sample point estimate
    const MediationFit full = fit_mediation(data, x, m, y);

    IntervalEstimate ci;
    ci.method = CiMethod::Bootstrap;
    ci.level = level;
    ci.point = full.beta3 * full.betaM;
    ci.meta.seed = seed;
    ci.meta.replicates = B;

    std::vector<double> stats;
    stats.reserve(static_cast<std::size_t>(B));
    Eigen::VectorXd rx(n), rm(n), ry(n);
    Eigen::MatrixXd X2(n, 2), X3(n, 1);
    for (long b = 0; b < B; ++b) {
        Rng rng(seed, static_cast<std::uint64_t>(b));
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto j =
                static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
            rx(i) = xv(j);
            rm(i) = mv(j);
            ry(i) = yv(j);
        }
        try {
            X2.col(0) = rx;
            X2.col(1) = rm;
            const OlsFit eq2 = ols_fit(ry, X2, {x, m});
            X3.col(0) = rx;
            const OlsFit eq3 = ols_fit(rm, X3, {x});
            stats.push_back(eq3.slope(x) * eq2.slope(m));
        } catch (const rank_deficient&) {
            ++ci.meta.skipped;
        }
    }
    ci.meta.used = static_cast<long>(stats.size());
    if (stats.empty()) throw all_resamples_degenerate();

    std::sort(stats.begin(), stats.end());
    const double w = 1.0 - level;
    ci.lower = detail::quantile_sorted(stats, 0.5 * w);
    ci.upper = detail::quantile_sorted(stats, 1.0 - 0.5 * w);
    ci.se = detail::sample_sd(stats);
    return ci;
}

/// Distribution-of-the-product limits: Monte Carlo quantiles of
/// (beta3 + se3*Z1)(betaM + seM*Z2) with independent standard normal Z1, Z2.
inline IntervalEstimate product_distribution_ci(const MediationFit& fit, long draws,
                                                std::uint64_t seed, double level) {
    if (!(level > 0.0 && level < 1.0)) throw invalid_level(level);
    if (draws < 10000) throw too_few_draws(draws, 10000);

    IntervalEstimate ci;
    ci.method = CiMethod::ProductDistribution;
    ci.level = level;
    ci.point = fit.beta3 * fit.betaM;
    ci.meta.seed = seed;
    ci.meta.replicates = draws;
    ci.meta.used = draws;

    std::vector<double> samples(static_cast<std::size_t>(draws));
    Rng rng(seed);
    for (auto& s : samples) {
        const double g1 = fit.beta3 + fit.se3 * rng.normal();
        const double g2 = fit.betaM + fit.seM * rng.normal();
        s = g1 * g2;
    }

    const double w = 1.0 - level;
    // only two order statistics are needed; avoid the full sort
    const double h_lo = 0.5 * w * static_cast<double>(draws - 1);
    const double h_hi = (1.0 - 0.5 * w) * static_cast<double>(draws - 1);
    const auto pick = [&](double h) {
        const auto lo = static_cast<std::size_t>(std::floor(h));
        std::nth_element(samples.begin(), samples.begin() + static_cast<long>(lo),
                         samples.end());
        const double a = samples[lo];
        if (lo + 1 >= samples.size()) return a;
        const double b = *std::min_element(samples.begin() + static_cast<long>(lo) + 1,
                                           samples.end());
        return a + (h - std::floor(h)) * (b - a);
    };
    ci.lower = pick(h_lo);
    ci.upper = pick(h_hi);
    ci.se = detail::sample_sd(samples);
    return ci;
}

}  // namespace pathmed
