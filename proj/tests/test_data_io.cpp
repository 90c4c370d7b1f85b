#include <doctest.h>

#include <vector>

#include "oracles.hpp"
#include "pathmed/data_io.hpp"
#include "pathmed/rng.hpp"

using namespace pathmed;

TEST_CASE("basic csv parse") {
    const auto data = parse_csv("x,m,y\n1,2,3\n4,5,6\n7,8,9\n");
    CHECK(data.columns == std::vector<std::string>{"x", "m", "y"});
    CHECK(data.n() == 3);
    CHECK(data.p() == 3);
    CHECK(data.values(1, 2) == 6.0);
    CHECK(data.rows_dropped == 0);
}

TEST_CASE("bad cell reports row, column, and token") {
    try {
        parse_csv("x,y\n1,2\nabc,4\n5,6\n");
        FAIL("expected csv_parse_error");
    } catch (const csv_parse_error& e) {
        CHECK(e.row == 2);
        CHECK(e.column == 1);
        CHECK(e.token == "abc");
    }
}

TEST_CASE("missing markers trigger listwise deletion") {
    const auto data = parse_csv("x,y\n1,2\nNA,4\n5,6\n7,8\n");
    CHECK(data.n() == 3);
    CHECK(data.rows_dropped == 1);
    // entire row disappears, including the finite cell
    CHECK(data.values(1, 0) == 5.0);

    const auto custom =
        parse_csv("x,y\n1,2\n-999,4\n5,6\n7,8\n",
                  CsvOptions{',', {"-999"}, MissingPolicy::listwise_delete});
    CHECK(custom.n() == 3);
    CHECK(custom.rows_dropped == 1);
}

TEST_CASE("header problems") {
    CHECK_THROWS_AS((void)parse_csv("x,x\n1,2\n3,4\n5,6\n"), header_error);
    CHECK_THROWS_AS((void)parse_csv("x,\n1,2\n3,4\n5,6\n"), header_error);
    CHECK_THROWS_AS((void)parse_csv(""), header_error);
}

TEST_CASE("too few usable rows") {
    CHECK_THROWS_AS((void)parse_csv("x,y\n1,2\n3,4\n"), too_few_rows);
    // rows lost to deletion count against the minimum
    CHECK_THROWS_AS((void)parse_csv("x,y\n1,2\nNA,4\nNA,6\n"), too_few_rows);
}

TEST_CASE("field-count mismatch and non-finite values") {
    CHECK_THROWS_AS((void)parse_csv("x,y\n1,2,3\n4,5\n6,7\n"), csv_parse_error);
    CHECK_THROWS_AS((void)parse_csv("x,y\n1,2\n1e999,4\n5,6\n"), csv_parse_error);
    CHECK_THROWS_AS((void)parse_csv("x,y\n1,2\ninf,4\n5,6\n"), csv_parse_error);
}

TEST_CASE("alternative delimiter and whitespace tolerance") {
    CsvOptions semi;
    semi.delimiter = ';';
    const auto data = parse_csv("x;y\n 1 ;2\n3; 4\n5;6\n", semi);
    CHECK(data.values(0, 0) == 1.0);
    CHECK(data.values(1, 1) == 4.0);
}

TEST_CASE("load_csv missing file") {
    CHECK_THROWS_AS((void)load_csv("/nonexistent/file.csv"), io_error);
}

TEST_CASE("moments of a tiny column") {
    const auto data = parse_csv("a\n1\n2\n3\n");
    const auto m = compute_moments(data);
    CHECK(m.means(0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(m.cov(0, 0) == doctest::Approx(1.0).epsilon(1e-15));  // divisor n-1
    CHECK(m.n == 3);
}

TEST_CASE("identical columns have correlation one") {
    const auto data = parse_csv("a,b\n1,1\n2,2\n5,5\n9,9\n");
    const auto m = compute_moments(data);
    CHECK(m.cov(0, 1) == doctest::Approx(m.cov(0, 0)).epsilon(1e-14));
    const double corr = m.cov(0, 1) / std::sqrt(m.cov(0, 0) * m.cov(1, 1));
    CHECK(corr == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("constant column flagged, strict mode throws") {
    const auto data = parse_csv("a,b\n1,7\n2,7\n3,7\n");
    const auto m = compute_moments(data);
    CHECK(m.cov(1, 1) == 0.0);
    REQUIRE(m.degenerate.size() == 1);
    CHECK(m.degenerate[0] == "b");
    CHECK_THROWS_AS((void)compute_moments(data, true), degenerate_column);
}

namespace {

Dataset random_dataset(Rng& rng, Eigen::Index n, Eigen::Index p) {
    Dataset d;
    for (Eigen::Index j = 0; j < p; ++j) d.columns.push_back("c" + std::to_string(j));
    d.values.resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) d.values(i, j) = rng.normal(0.0, 1.0 + j);
    return d;
}

}  // namespace

TEST_CASE("covariance equals the two-pass definition on random data") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const auto data = random_dataset(rng, 40 + trial, 4);
        const auto m = compute_moments(data);
        for (Eigen::Index a = 0; a < 4; ++a)
            for (Eigen::Index b = 0; b < 4; ++b) {
                std::vector<double> xa(data.values.col(a).data(),
                                       data.values.col(a).data() + data.n());
                std::vector<double> xb(data.values.col(b).data(),
                                       data.values.col(b).data() + data.n());
                CHECK(m.cov(a, b) ==
                      doctest::Approx(oracles::two_pass_covariance(xa, xb)).epsilon(1e-12));
            }
        // symmetry to 1e-12 and PSD are construction guarantees
        CHECK((m.cov - m.cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("row permutation leaves moments unchanged") {
    Rng rng(7);
    const auto data = random_dataset(rng, 30, 3);
    Dataset shuffled = data;
    // deterministic Fisher-Yates
    for (Eigen::Index i = data.n() - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(
            rng.uniform_index(static_cast<std::uint64_t>(i + 1)));
        shuffled.values.row(i).swap(shuffled.values.row(j));
    }
    const auto m0 = compute_moments(data);
    const auto m1 = compute_moments(shuffled);
    CHECK((m0.cov - m1.cov).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((m0.means - m1.means).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("adding a constant shifts the mean and not the covariance") {
    Rng rng(8);
    const auto data = random_dataset(rng, 50, 3);
    Dataset shifted = data;
    shifted.values.col(1).array() += 17.5;
    const auto m0 = compute_moments(data);
    const auto m1 = compute_moments(shifted);
    CHECK(m1.means(1) == doctest::Approx(m0.means(1) + 17.5).epsilon(1e-12));
    CHECK((m0.cov - m1.cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("restrict_moments subsets and reorders") {
    const auto data = parse_csv("a,b,c\n1,2,1\n2,4,5\n3,8,2\n5,1,9\n");
    const auto m = compute_moments(data);
    const auto r = restrict_moments(m, {"c", "a"});
    CHECK(r.columns == std::vector<std::string>{"c", "a"});
    CHECK(r.cov(0, 0) == doctest::Approx(m.cov(2, 2)).epsilon(1e-15));
    CHECK(r.cov(0, 1) == doctest::Approx(m.cov(2, 0)).epsilon(1e-15));
    CHECK(r.means(1) == doctest::Approx(m.means(0)).epsilon(1e-15));
    CHECK_THROWS_AS((void)restrict_moments(m, {"a", "zz"}), missing_column);
}
