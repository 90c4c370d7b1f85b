#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "pathmed/data_io.hpp"
#include "pathmed/errors.hpp"
#include "pathmed/inference.hpp"
#include "pathmed/mediation.hpp"
#include "pathmed/rng.hpp"

// Seeded replication engine for the single-mediator model. Every replication
// draws its own RNG streams from (seed, index), so a report depends only on
// the design and never on the worker count.

namespace pathmed {

struct SimulationDesign {
    double a = 0;          // true X -> M path
    double b = 0;          // true M -> Y path
    double tau_prime = 0;  // true direct X -> Y path
    double sd_x = 1;
    double sd_e2 = 1;  // disturbance of M
    double sd_e1 = 1;  // disturbance of Y
    Eigen::Index n = 0;
    long R = 0;
    std::uint64_t seed = 0;
    double level = 0.95;
    std::set<CiMethod> methods{CiMethod::Normal};
    long B = 2000;       // bootstrap resamples per replication
    long draws = 100000; // product-distribution draws per replication

    void validate() const {
        if (!(sd_x > 0 && sd_e2 > 0 && sd_e1 > 0))
            throw usage_error("simulation design: standard deviations must be positive");
        if (n < 10) throw usage_error("simulation design: n must be at least 10");
        if (R < 1) throw usage_error("simulation design: R must be at least 1");
        if (!(level > 0 && level < 1)) throw invalid_level(level);
    }
};

/// One dataset under the design: X ~ N(0, sd_x^2), M = a X + e2,
/// Y = tau' X + b M + e1. Columns are named X, M, Y.
inline Dataset generate_dataset(const SimulationDesign& design, long replication_index) {
    design.validate();
    Rng rng(design.seed, static_cast<std::uint64_t>(replication_index));
    Dataset data;
    data.columns = {"X", "M", "Y"};
    data.values.resize(design.n, 3);
    for (Eigen::Index i = 0; i < design.n; ++i) {
        const double x = design.sd_x * rng.normal();
        const double m = design.a * x + design.sd_e2 * rng.normal();
        const double y = design.tau_prime * x + design.b * m + design.sd_e1 * rng.normal();
        data.values(i, 0) = x;
        data.values(i, 1) = m;
        data.values(i, 2) = y;
    }
    return data;
}

struct MethodSummary {
    double coverage = 0;
    double miss_below = 0;  // true value < lower
    double miss_above = 0;  // true value > upper
    double rejection = 0;   // interval excludes zero
};

struct SimulationReport {
    double true_indirect = 0;  // a * b
    long replications_requested = 0;
    long replications_used = 0;
    long degenerate_skipped = 0;
    double mean_estimate = 0;
    double bias = 0;
    double empirical_sd = 0;
    double mean_sobel_se = 0;
    double se_relative_bias = 0;  // mean_sobel_se / empirical_sd - 1
    std::map<CiMethod, MethodSummary> methods;
};

namespace detail {

struct RepRecord {
    bool ok = false;
    double estimate = 0;
    double difference = 0;
    double sobel = 0;
    struct Limits {
        bool present = false;
        double lower = 0;
        double upper = 0;
    };
    Limits ci[3];  // indexed by CiMethod
};

inline void run_replication(const SimulationDesign& design, long r, RepRecord& rec) {
    const Dataset data = generate_dataset(design, r);
    MediationFit fit;
    try {
        fit = fit_mediation(data, "X", "M", "Y");
    } catch (const analysis_error&) {
        rec.ok = false;
        return;
    }
    rec.ok = true;
    rec.estimate = fit.beta3 * fit.betaM;
    rec.difference = fit.beta1 - fit.beta2;
    rec.sobel = sobel_se(fit);

    try {
        for (const CiMethod method : design.methods) {
            auto& slot = rec.ci[static_cast<int>(method)];
            IntervalEstimate ci;
            switch (method) {
                case CiMethod::Normal:
                    ci = normal_ci(rec.estimate, rec.sobel, design.level);
                    break;
                case CiMethod::Bootstrap:
                    ci = bootstrap_ci(data, "X", "M", "Y", design.B,
                                      derive_seed(design.seed, static_cast<std::uint64_t>(r), 1),
                                      design.level);
                    break;
                case CiMethod::ProductDistribution:
                    ci = product_distribution_ci(
                        fit, design.draws,
                        derive_seed(design.seed, static_cast<std::uint64_t>(r), 2),
                        design.level);
                    break;
            }
            slot.present = true;
            slot.lower = ci.lower;
            slot.upper = ci.upper;
        }
    } catch (const analysis_error&) {
        rec.ok = false;
    }
}

}  // namespace detail

/// Run the full study. Replications are distributed over `threads` workers;
/// aggregation walks the records in replication order, so the report is
/// identical for any worker count.
inline SimulationReport run_study(const SimulationDesign& design, int threads = 1) {
    design.validate();

    std::vector<detail::RepRecord> records(static_cast<std::size_t>(design.R));
    const long R = design.R;
    threads = std::max(1, std::min<int>(threads, static_cast<int>(R)));

    if (threads == 1) {
        for (long r = 0; r < R; ++r)
            detail::run_replication(design, r, records[static_cast<std::size_t>(r)]);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                for (long r = w; r < R; r += threads)
                    detail::run_replication(design, r, records[static_cast<std::size_t>(r)]);
            });
        }
        for (auto& t : pool) t.join();
    }

    SimulationReport report;
    report.true_indirect = design.a * design.b;
    report.replications_requested = R;

    double sum = 0, sum_se = 0;
    std::map<CiMethod, std::array<long, 3>> tallies;  // below, inside, above
    std::map<CiMethod, long> rejections;
    for (const CiMethod m : design.methods) {
        tallies[m] = {0, 0, 0};
        rejections[m] = 0;
    }

    for (const auto& rec : records) {
        if (!rec.ok) {
            ++report.degenerate_skipped;
            continue;
        }
        ++report.replications_used;
        sum += rec.estimate;
        sum_se += rec.sobel;
        for (const CiMethod m : design.methods) {
            const auto& ci = rec.ci[static_cast<int>(m)];
            if (!ci.present) continue;
            auto& t = tallies[m];
            if (report.true_indirect < ci.lower)
                ++t[0];
            else if (report.true_indirect > ci.upper)
                ++t[2];
            else
                ++t[1];
            if (0.0 < ci.lower || 0.0 > ci.upper) ++rejections[m];
        }
    }

    if (report.replications_used == 0) throw all_replications_degenerate();
    if (report.degenerate_skipped * 100 > R)
        throw excessive_degenerate_replications(report.degenerate_skipped, R);

    const auto used = static_cast<double>(report.replications_used);
    report.mean_estimate = sum / used;
    report.bias = report.mean_estimate - report.true_indirect;
    double ss = 0;
    for (const auto& rec : records)
        if (rec.ok) ss += (rec.estimate - report.mean_estimate) *
                          (rec.estimate - report.mean_estimate);
    report.empirical_sd = used > 1 ? std::sqrt(ss / (used - 1)) : 0.0;
    report.mean_sobel_se = sum_se / used;
    report.se_relative_bias =
        report.empirical_sd > 0 ? report.mean_sobel_se / report.empirical_sd - 1.0 : 0.0;

    for (const CiMethod m : design.methods) {
        const auto& t = tallies[m];
        MethodSummary s;
        s.miss_below = static_cast<double>(t[0]) / used;
        s.coverage = static_cast<double>(t[1]) / used;
        s.miss_above = static_cast<double>(t[2]) / used;
        s.rejection = static_cast<double>(rejections[m]) / used;
        report.methods[m] = s;
    }
    return report;
}

}  // namespace pathmed
