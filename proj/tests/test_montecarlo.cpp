#include <doctest.h>

#include <cmath>

#include "pathmed/design_json.hpp"
#include "pathmed/montecarlo.hpp"
#include "pathmed/path_fit.hpp"

using namespace pathmed;

namespace {

SimulationDesign base_design() {
    SimulationDesign d;
    d.a = 0.39;
    d.b = 0.39;
    d.tau_prime = 0.0;
    d.n = 50;
    d.R = 200;
    d.seed = 20240809;
    return d;
}

}  // namespace

TEST_CASE("generated datasets are reproducible bit for bit") {
    const auto d = base_design();
    const auto one = generate_dataset(d, 3);
    const auto two = generate_dataset(d, 3);
    CHECK(one.values == two.values);
    const auto other = generate_dataset(d, 4);
    CHECK(one.values != other.values);
}

TEST_CASE("null design produces uncorrelated columns at n = 1e6") {
    SimulationDesign d = base_design();
    d.a = d.b = d.tau_prime = 0.0;
    d.n = 1000000;
    const auto data = generate_dataset(d, 0);
    const auto m = compute_moments(data);
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            const double corr = m.cov(i, j) / std::sqrt(m.cov(i, i) * m.cov(j, j));
            CHECK(std::fabs(corr) < 0.005);
        }
}

TEST_CASE("large-sample covariance matches the structural algebra") {
    SimulationDesign d = base_design();
    d.a = 0.5;
    d.b = 0.5;
    d.tau_prime = 0.0;
    d.n = 1000000;
    const auto data = generate_dataset(d, 0);
    const auto m = compute_moments(data);

    auto mats = build_matrices(parse_model("M ~ X\nY ~ X + M"));
    Eigen::VectorXd theta(6);
    theta << 0.5, 0.0, 0.5, 1.0, 1.0, 1.0;  // M~X, Y~X, Y~M, VarX, VarE2, VarE1
    mats.set_theta(theta);
    const auto sigma = implied_covariance(mats);
    // mats order is M, X, Y; data order is X, M, Y
    const auto reordered = restrict_moments(m, {"M", "X", "Y"});
    CHECK((reordered.cov - sigma).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("study reports are identical for any worker count") {
    SimulationDesign d = base_design();
    d.R = 60;
    d.n = 40;
    d.methods = {CiMethod::Normal, CiMethod::Bootstrap, CiMethod::ProductDistribution};
    d.B = 200;
    d.draws = 10000;

    const auto r1 = run_study(d, 1);
    const auto r2 = run_study(d, 2);
    const auto r4 = run_study(d, 4);

    CHECK(r1.mean_estimate == r2.mean_estimate);
    CHECK(r1.mean_estimate == r4.mean_estimate);
    CHECK(r1.empirical_sd == r2.empirical_sd);
    CHECK(r1.mean_sobel_se == r4.mean_sobel_se);
    for (const auto& [method, summary] : r1.methods) {
        CHECK(summary.coverage == r2.methods.at(method).coverage);
        CHECK(summary.coverage == r4.methods.at(method).coverage);
        CHECK(summary.rejection == r4.methods.at(method).rejection);
        CHECK(summary.miss_below == r4.methods.at(method).miss_below);
        CHECK(summary.miss_above == r4.methods.at(method).miss_above);
    }
}

TEST_CASE("coverage and miss rates partition the replications") {
    SimulationDesign d = base_design();
    d.R = 500;
    d.methods = {CiMethod::Normal};
    const auto report = run_study(d, 2);
    CHECK(report.replications_used == 500);
    CHECK(report.degenerate_skipped == 0);
    const auto& s = report.methods.at(CiMethod::Normal);
    CHECK(s.coverage + s.miss_below + s.miss_above == doctest::Approx(1.0).epsilon(1e-12));
    // counts, not rounded rates: multiplying back by R gives integers
    CHECK(s.coverage * 500 == doctest::Approx(std::round(s.coverage * 500)).epsilon(1e-9));
}

TEST_CASE("sobel se tracks the empirical sd at n = 50") {
    SimulationDesign d = base_design();
    d.R = 2000;
    const auto report = run_study(d, 2);
    CHECK(report.empirical_sd > 0.0);
    CHECK(std::fabs(report.se_relative_bias) < 0.3);
    CHECK(report.mean_estimate == doctest::Approx(0.39 * 0.39).epsilon(0.15));
}

TEST_CASE("estimator bias shrinks with the sample size") {
    SimulationDesign d = base_design();
    d.R = 10000;
    d.methods = {};
    d.n = 25;
    const auto small = run_study(d, 2);
    d.n = 1000;
    const auto large = run_study(d, 2);
    CHECK(std::fabs(large.bias) < std::fabs(small.bias));
}

TEST_CASE("design validation") {
    SimulationDesign d = base_design();
    d.n = 5;
    CHECK_THROWS_AS((void)run_study(d), usage_error);
    d = base_design();
    d.R = 0;
    CHECK_THROWS_AS((void)run_study(d), usage_error);
    d = base_design();
    d.sd_x = 0.0;
    CHECK_THROWS_AS((void)generate_dataset(d, 0), usage_error);
    d = base_design();
    d.level = 1.0;
    CHECK_THROWS_AS((void)run_study(d), invalid_level);
}

TEST_CASE("designs parse from json") {
    const auto j = nlohmann::json::parse(R"({
        "a": 0.39, "b": 0.0, "tau_prime": 0.1,
        "n": 200, "R": 50, "seed": 7, "level": 0.9,
        "methods": ["Normal", "ProductDistribution"],
        "B": 500, "draws": 20000
    })");
    const auto parsed = design_from_json(j);
    CHECK(parsed.has_seed);
    CHECK(parsed.design.a == 0.39);
    CHECK(parsed.design.b == 0.0);
    CHECK(parsed.design.tau_prime == 0.1);
    CHECK(parsed.design.n == 200);
    CHECK(parsed.design.R == 50);
    CHECK(parsed.design.seed == 7);
    CHECK(parsed.design.level == 0.9);
    CHECK(parsed.design.B == 500);
    CHECK(parsed.design.draws == 20000);
    CHECK(parsed.design.methods ==
          std::set<CiMethod>{CiMethod::Normal, CiMethod::ProductDistribution});

    // defaults and the missing-seed flag
    const auto minimal = design_from_json(
        nlohmann::json::parse(R"({"a":0.3,"b":0.3,"tau_prime":0,"n":50,"R":10})"));
    CHECK_FALSE(minimal.has_seed);
    CHECK(minimal.design.sd_x == 1.0);
    CHECK(minimal.design.level == 0.95);
    CHECK(minimal.design.B == 2000);
    CHECK(minimal.design.draws == 100000);
    CHECK(minimal.design.methods == std::set<CiMethod>{CiMethod::Normal});
}

TEST_CASE("design json rejects typos and bad values") {
    CHECK_THROWS_AS((void)design_from_json(nlohmann::json::parse(
                        R"({"a":0.3,"b":0.3,"tau":0,"n":50,"R":10})")),
                    usage_error);  // tau is not a field
    CHECK_THROWS_AS((void)design_from_json(nlohmann::json::parse(
                        R"({"a":0.3,"b":0.3,"tau_prime":0,"n":50})")),
                    usage_error);  // R missing
    CHECK_THROWS_AS((void)design_from_json(nlohmann::json::parse(
                        R"({"a":0.3,"b":0.3,"tau_prime":0,"n":50,"R":10,"methods":["Magic"]})")),
                    usage_error);
    CHECK_THROWS_AS((void)design_from_json(nlohmann::json::parse("[1,2]")), usage_error);
}
