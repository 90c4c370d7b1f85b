#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pathmed/inference.hpp"
#include "pathmed/montecarlo.hpp"

using namespace pathmed;

namespace {

MediationFit fit_with(double beta3, double se3, double betaM, double seM) {
    MediationFit fit;
    fit.beta3 = beta3;
    fit.se3 = se3;
    fit.betaM = betaM;
    fit.seM = seM;
    return fit;
}

Dataset orthogonalized_dataset(Eigen::Index n, std::uint64_t seed) {
    // M is replaced by its residual on X, so the sample beta3 is exactly 0
    Rng rng(seed);
    Eigen::VectorXd x(n), m0(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i) = rng.normal();
        m0(i) = 0.4 * x(i) + rng.normal();
        y(i) = 0.3 * x(i) + 0.5 * m0(i) + rng.normal();
    }
    const double slope = (m0.array() - m0.mean()).matrix().dot(
                             (x.array() - x.mean()).matrix()) /
                         (x.array() - x.mean()).matrix().squaredNorm();
    const Eigen::VectorXd m =
        m0.array() - m0.mean() - slope * (x.array() - x.mean());

    Dataset data;
    data.columns = {"X", "M", "Y"};
    data.values.resize(n, 3);
    data.values.col(0) = x;
    data.values.col(1) = m;
    data.values.col(2) = y;
    return data;
}

// standard error of an empirical p-quantile via the spacing density estimate
double quantile_se(std::vector<double> sorted, double p) {
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    const double delta = 0.01;
    const double q_hi = detail::quantile_sorted(sorted, std::min(0.999, p + delta));
    const double q_lo = detail::quantile_sorted(sorted, std::max(0.001, p - delta));
    const double density = 2.0 * delta / std::max(1e-300, q_hi - q_lo);
    return std::sqrt(p * (1.0 - p) / n) / density;
}

}  // namespace

TEST_CASE("sobel standard error by hand substitution") {
    const auto fit = fit_with(0.5, 0.1, 0.4, 0.2);
    CHECK(sobel_se(fit) == doctest::Approx(0.1077033).epsilon(1e-6));
    // exact product-of-normals form adds se3^2 * seM^2
    CHECK(sobel_se(fit, true) == doctest::Approx(0.1095445).epsilon(1e-6));
    CHECK(sobel_se(fit, true) > sobel_se(fit));
    CHECK((sobel_se(fit, true) - sobel_se(fit)) / sobel_se(fit, true) < 0.03);

    // zero-path reduction
    const auto zero = fit_with(0.0, 0.1, 0.4, 0.2);
    CHECK(sobel_se(zero) == doctest::Approx(0.4 * 0.1).epsilon(1e-12));
}

TEST_CASE("sobel test statistics") {
    const auto fit = fit_with(0.5, 0.1, 0.4, 0.2);
    const auto test = sobel_test(fit);
    CHECK(test.z == doctest::Approx(0.2 / 0.10770329614269007).epsilon(1e-10));
    CHECK(test.z == doctest::Approx(1.85695).epsilon(1e-5));
    CHECK(test.p == doctest::Approx(0.06324).epsilon(1e-3));

    const auto null_fit = fit_with(0.5, 0.1, 0.0, 0.2);  // product is 0, se > 0
    const auto null_test = sobel_test(null_fit);
    CHECK(null_test.z == 0.0);
    CHECK(null_test.p == 1.0);

    CHECK(norm_two_sided_p(3.0) == doctest::Approx(0.0026998).epsilon(1e-4));

    const auto degenerate = fit_with(0.0, 0.0, 0.0, 0.0);
    CHECK_THROWS_AS((void)sobel_test(degenerate), zero_se);
}

TEST_CASE("normal-theory interval") {
    const auto ci = normal_ci(0.2, 0.10770329614269007, 0.95);
    CHECK(ci.lower == doctest::Approx(-0.0110946).epsilon(1e-4));
    CHECK(ci.upper == doctest::Approx(0.4110946).epsilon(1e-4));
    CHECK(ci.lower <= ci.point);
    CHECK(ci.point <= ci.upper);
    // symmetric about the point
    CHECK(ci.upper - ci.point == doctest::Approx(ci.point - ci.lower).epsilon(1e-12));
    // width is exactly 2 z se
    CHECK(ci.upper - ci.lower ==
          doctest::Approx(2 * z_critical(0.95) * 0.10770329614269007).epsilon(1e-12));

    const auto degenerate = normal_ci(0.3, 0.0, 0.9);
    CHECK(degenerate.lower == 0.3);
    CHECK(degenerate.upper == 0.3);

    CHECK_THROWS_AS((void)normal_ci(0.2, 0.1, 0.0), invalid_level);
    CHECK_THROWS_AS((void)normal_ci(0.2, 0.1, 1.0), invalid_level);
    CHECK_THROWS_AS((void)normal_ci(0.2, -0.1, 0.9), usage_error);
}

TEST_CASE("interval widths increase with the level") {
    double prev = 0.0;
    for (const double level : {0.5, 0.8, 0.9, 0.95, 0.99}) {
        const auto ci = normal_ci(0.0, 1.0, level);
        CHECK(ci.upper - ci.lower > prev);
        prev = ci.upper - ci.lower;
    }
}

TEST_CASE("bootstrap interval is deterministic and respects its guards") {
    SimulationDesign d;
    d.a = 0.4;
    d.b = 0.4;
    d.tau_prime = 0.1;
    d.n = 80;
    d.R = 1;
    d.seed = 555;
    const auto data = generate_dataset(d, 0);

    const auto ci1 = bootstrap_ci(data, "X", "M", "Y", 500, 2024, 0.95);
    const auto ci2 = bootstrap_ci(data, "X", "M", "Y", 500, 2024, 0.95);
    CHECK(ci1.lower == ci2.lower);  // bit identical
    CHECK(ci1.upper == ci2.upper);
    CHECK(ci1.meta.used == 500);
    CHECK(ci1.lower <= ci1.upper);

    const auto other_seed = bootstrap_ci(data, "X", "M", "Y", 500, 2025, 0.95);
    CHECK(other_seed.lower != ci1.lower);

    CHECK_THROWS_AS((void)bootstrap_ci(data, "X", "M", "Y", 0, 1, 0.95),
                    too_few_replicates);
    CHECK_THROWS_AS((void)bootstrap_ci(data, "X", "M", "Y", 99, 1, 0.95),
                    too_few_replicates);
    CHECK_THROWS_AS((void)bootstrap_ci(data, "X", "M", "Y", 500, 1, 1.5), invalid_level);
}

TEST_CASE("bootstrap interval straddles zero when the sample beta3 is zero") {
    const auto data = orthogonalized_dataset(120, 77);
    const auto fit = fit_mediation(data, "X", "M", "Y");
    CHECK(std::fabs(fit.beta3) < 1e-12);
    const auto ci = bootstrap_ci(data, "X", "M", "Y", 2000, 31337, 0.95);
    CHECK(std::fabs(ci.point) < 1e-12);
    CHECK(ci.lower < 0.0);
    CHECK(ci.upper > 0.0);
}

TEST_CASE("product-distribution interval: determinism and symmetry at zero") {
    const auto zero = fit_with(0.0, 1.0, 0.0, 1.0);
    const auto ci1 = product_distribution_ci(zero, 1000000, 99, 0.95);
    const auto ci2 = product_distribution_ci(zero, 1000000, 99, 0.95);
    CHECK(ci1.lower == ci2.lower);
    CHECK(ci1.upper == ci2.upper);

    // symmetric distribution: |lower + upper| within 3 quantile standard errors
    std::vector<double> draws(1000000);
    Rng rng(99);
    for (auto& v : draws) v = rng.normal() * rng.normal();
    const double se_q = quantile_se(draws, 0.025) + quantile_se(draws, 0.975);
    CHECK(std::fabs(ci1.lower + ci1.upper) < 3.0 * se_q);

    CHECK_THROWS_AS((void)product_distribution_ci(zero, 9999, 1, 0.95), too_few_draws);
}

TEST_CASE("product-distribution interval is right-skewed for positive paths") {
    const auto fit = fit_with(0.5, 0.1, 0.4, 0.2);
    const auto ci = product_distribution_ci(fit, 1000000, 7, 0.95);
    CHECK(ci.point == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(ci.upper - ci.point > ci.point - ci.lower);
}

TEST_CASE("endpoints stabilize as the budget doubles") {
    const auto fit = fit_with(0.5, 0.15, 0.4, 0.2);
    const auto small = product_distribution_ci(fit, 200000, 5, 0.95);
    const auto big = product_distribution_ci(fit, 400000, 5, 0.95);

    std::vector<double> draws(200000);
    Rng rng(5);
    for (auto& v : draws)
        v = (0.5 + 0.15 * rng.normal()) * (0.4 + 0.2 * rng.normal());
    const double se_lo = quantile_se(draws, 0.025);
    const double se_hi = quantile_se(draws, 0.975);
    CHECK(std::fabs(small.lower - big.lower) < 3.0 * se_lo);
    CHECK(std::fabs(small.upper - big.upper) < 3.0 * se_hi);

    // bootstrap version of the same check, on real data
    SimulationDesign d;
    d.a = 0.4;
    d.b = 0.3;
    d.tau_prime = 0.0;
    d.n = 60;
    d.R = 1;
    d.seed = 12;
    const auto data = generate_dataset(d, 0);
    const auto b1 = bootstrap_ci(data, "X", "M", "Y", 1000, 88, 0.95);
    const auto b2 = bootstrap_ci(data, "X", "M", "Y", 2000, 88, 0.95);
    // bootstrap quantile error at B=1000 for this effect size is ~0.01-0.02
    CHECK(std::fabs(b1.lower - b2.lower) < 0.08);
    CHECK(std::fabs(b1.upper - b2.upper) < 0.08);
}

TEST_CASE("excess kurtosis of the two-normal product approaches six") {
    std::vector<double> draws(1000000);
    Rng rng(42);
    for (auto& v : draws) v = rng.normal() * rng.normal();
    const double k = oracles::excess_kurtosis(draws);
    CHECK(k > 5.5);
    CHECK(k < 6.5);
}
