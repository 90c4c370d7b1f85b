#pragma once

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pathmed/inference.hpp"
#include "pathmed/json_writer.hpp"
#include "pathmed/mediation.hpp"
#include "pathmed/model_dsl.hpp"
#include "pathmed/montecarlo.hpp"
#include "pathmed/path_fit.hpp"
#include "pathmed/version.hpp"

// Report assembly for the command-line front end. The JSON form is fully
// deterministic: sorted keys, 17-significant-digit numerics, no timestamps.

namespace pathmed {

struct AnalysisReport {
    // inputs
    std::string data_path;
    std::string model_path;
    std::string design_path;
    std::vector<std::string> variables;
    Eigen::Index n = -1;
    long rows_dropped = -1;

    // run settings actually used
    std::optional<double> alpha;
    std::optional<double> level;
    std::optional<std::uint64_t> seed;
    std::optional<long> boot_reps;
    std::optional<long> draws;
    std::optional<int> threads;

    struct MediationBlock {
        MediationFit fit;
        EffectDecomposition effects;
        CausalStepsVerdict verdict;
        AssumptionDiagnostics diagnostics;
        std::vector<std::string> advisories;
    };
    std::optional<MediationBlock> mediation;

    struct InferenceBlock {
        double point = 0;
        double se = 0;
        double se_exact = 0;
        std::optional<SobelTest> sobel;
        std::vector<IntervalEstimate> intervals;
    };
    std::optional<InferenceBlock> inference;

    struct PathFitBlock {
        ModelSpec spec;
        std::map<std::string, VariableRole> roles;
        MlFit fit;
        FitStatistics null_fit;
        FitIndices indices;
        std::vector<IndexVerdict> verdicts;
    };
    std::optional<PathFitBlock> pathfit;

    struct ParseBlock {
        ModelSpec spec;
        std::map<std::string, VariableRole> roles;
    };
    std::optional<ParseBlock> model;

    struct SimulationBlock {
        SimulationDesign design;
        SimulationReport report;
    };
    std::optional<SimulationBlock> simulation;
};

namespace detail {

inline JsonValue equation_json(const OlsFit& eq, const std::string& outcome) {
    JsonValue coefs = JsonValue::object();
    coefs["(intercept)"] = [&] {
        JsonValue c = JsonValue::object();
        c["estimate"] = eq.intercept;
        c["se"] = eq.se(0);
        c["t"] = eq.t_stats(0);
        c["p"] = eq.p_values(0);
        return c;
    }();
    for (std::size_t i = 0; i < eq.names.size(); ++i) {
        JsonValue c = JsonValue::object();
        c["estimate"] = eq.slopes(static_cast<Eigen::Index>(i));
        c["se"] = eq.se(static_cast<Eigen::Index>(i) + 1);
        c["t"] = eq.t_stats(static_cast<Eigen::Index>(i) + 1);
        c["p"] = eq.p_values(static_cast<Eigen::Index>(i) + 1);
        coefs[eq.names[i]] = std::move(c);
    }
    JsonValue out = JsonValue::object();
    out["outcome"] = outcome;
    out["coefficients"] = std::move(coefs);
    out["r2"] = eq.r2;
    out["sigma2"] = eq.sigma2;
    out["df_resid"] = static_cast<long>(eq.df_resid);
    return out;
}

inline JsonValue interval_json(const IntervalEstimate& ci) {
    JsonValue out = JsonValue::object();
    out["point"] = ci.point;
    out["lower"] = ci.lower;
    out["upper"] = ci.upper;
    out["level"] = ci.level;
    out["se"] = json_or_null(ci.se);
    if (ci.method != CiMethod::Normal) {
        JsonValue meta = JsonValue::object();
        meta["seed"] = static_cast<unsigned long long>(ci.meta.seed);
        meta["replicates"] = ci.meta.replicates;
        meta["used"] = ci.meta.used;
        meta["skipped"] = ci.meta.skipped;
        out["meta"] = std::move(meta);
    }
    return out;
}

inline std::string fmt(double v, const char* spec = "%.6g") {
    char buf[40];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::string fmt_opt(const std::optional<double>& v, const char* spec = "%.6g") {
    return v ? fmt(*v, spec) : std::string("n/a");
}

inline void text_equation(std::ostringstream& os, const char* tag, const OlsFit& eq,
                          const std::string& outcome) {
    os << "  " << tag << "  " << outcome << " ~ ";
    for (std::size_t i = 0; i < eq.names.size(); ++i)
        os << (i ? " + " : "") << eq.names[i];
    os << "   (R2 = " << fmt(eq.r2) << ")\n";
    char line[160];
    std::snprintf(line, sizeof line, "    %-14s %12s %12s %10s %12s\n", "term", "estimate",
                  "se", "t", "p");
    os << line;
    const auto row = [&](const std::string& term, Eigen::Index j) {
        const double est = j == 0 ? eq.intercept : eq.slopes(j - 1);
        std::snprintf(line, sizeof line, "    %-14s %12s %12s %10s %12s\n", term.c_str(),
                      fmt(est).c_str(), fmt(eq.se(j)).c_str(), fmt(eq.t_stats(j)).c_str(),
                      fmt(eq.p_values(j), "%.4g").c_str());
        os << line;
    };
    row("(intercept)", 0);
    for (std::size_t i = 0; i < eq.names.size(); ++i)
        row(eq.names[i], static_cast<Eigen::Index>(i) + 1);
}

}  // namespace detail

inline JsonValue report_to_json(const AnalysisReport& r) {
    JsonValue root = JsonValue::object();
    root["version"] = std::string(version_string);

    {
        JsonValue inputs = JsonValue::object();
        if (!r.data_path.empty()) inputs["data"] = r.data_path;
        if (!r.model_path.empty()) inputs["model"] = r.model_path;
        if (!r.design_path.empty()) inputs["design"] = r.design_path;
        if (!r.variables.empty()) {
            JsonValue vars = JsonValue::array();
            for (const auto& v : r.variables) vars.push_back(v);
            inputs["variables"] = std::move(vars);
        }
        if (r.n >= 0) inputs["n"] = static_cast<long>(r.n);
        if (r.rows_dropped >= 0) inputs["rows_dropped"] = r.rows_dropped;
        root["inputs"] = std::move(inputs);
    }

    {
        JsonValue run = JsonValue::object();
        if (r.alpha) run["alpha"] = *r.alpha;
        if (r.level) run["level"] = *r.level;
        if (r.seed) run["seed"] = static_cast<unsigned long long>(*r.seed);
        if (r.boot_reps) run["boot_reps"] = *r.boot_reps;
        if (r.draws) run["draws"] = *r.draws;
        if (r.threads) run["threads"] = *r.threads;
        root["run"] = std::move(run);
    }

    if (r.mediation) {
        const auto& m = *r.mediation;
        JsonValue block = JsonValue::object();
        {
            JsonValue names = JsonValue::object();
            names["x"] = m.fit.x;
            names["m"] = m.fit.m;
            names["y"] = m.fit.y;
            block["variables"] = std::move(names);
        }
        block["n"] = static_cast<long>(m.fit.n);
        {
            JsonValue eqs = JsonValue::object();
            eqs["eq1"] = detail::equation_json(m.fit.eq1, m.fit.y);
            eqs["eq2"] = detail::equation_json(m.fit.eq2, m.fit.y);
            eqs["eq3"] = detail::equation_json(m.fit.eq3, m.fit.m);
            block["equations"] = std::move(eqs);
        }
        {
            JsonValue eff = JsonValue::object();
            eff["direct"] = m.effects.direct;
            eff["indirect_product"] = m.effects.indirect_product;
            eff["indirect_difference"] = m.effects.indirect_difference;
            eff["total_eq1"] = m.effects.total_eq1;
            eff["total_composed"] = m.effects.total_composed;
            block["effects"] = std::move(eff);
        }
        {
            JsonValue cs = JsonValue::object();
            cs["alpha"] = m.verdict.alpha;
            JsonValue steps = JsonValue::array();
            for (const bool s : m.verdict.step_results) steps.push_back(s);
            cs["steps"] = std::move(steps);
            cs["outcome"] = std::string(to_string(m.verdict.outcome));
            cs["failed_step"] = m.verdict.failed_step > 0
                                    ? JsonValue(static_cast<long>(m.verdict.failed_step))
                                    : JsonValue(nullptr);
            cs["consistency"] = std::string(to_string(m.verdict.consistency));
            cs["note"] = m.verdict.note;
            block["causal_steps"] = std::move(cs);
        }
        {
            JsonValue d = JsonValue::object();
            JsonValue xm = JsonValue::object();
            xm["estimate"] = m.diagnostics.interaction_coef;
            xm["se"] = m.diagnostics.interaction_se;
            xm["t"] = m.diagnostics.interaction_t;
            xm["p"] = m.diagnostics.interaction_p;
            xm["significant"] = m.diagnostics.interaction_significant;
            d["xm_interaction"] = std::move(xm);
            d["residual_correlation_eq2_eq3"] = m.diagnostics.residual_correlation;
            JsonValue u = JsonValue::array();
            for (const auto& s : m.diagnostics.untestable) u.push_back(s);
            d["untestable_assumptions"] = std::move(u);
            block["diagnostics"] = std::move(d);
        }
        {
            JsonValue adv = JsonValue::array();
            for (const auto& s : m.advisories) adv.push_back(s);
            block["advisories"] = std::move(adv);
        }
        root["mediation"] = std::move(block);
    }

    if (r.inference) {
        const auto& inf = *r.inference;
        JsonValue block = JsonValue::object();
        block["indirect_point"] = inf.point;
        {
            JsonValue sobel = JsonValue::object();
            sobel["se"] = inf.se;
            sobel["se_exact"] = inf.se_exact;
            if (inf.sobel) {
                sobel["z"] = inf.sobel->z;
                sobel["p"] = inf.sobel->p;
            }
            block["sobel"] = std::move(sobel);
        }
        {
            JsonValue intervals = JsonValue::object();
            for (const auto& ci : inf.intervals)
                intervals[to_string(ci.method)] = detail::interval_json(ci);
            block["intervals"] = std::move(intervals);
        }
        root["inference"] = std::move(block);
    }

    if (r.pathfit) {
        const auto& pf = *r.pathfit;
        JsonValue block = JsonValue::object();
        {
            JsonValue vars = JsonValue::array();
            for (const auto& v : pf.spec.variables) vars.push_back(v);
            block["variables"] = std::move(vars);
            JsonValue roles = JsonValue::object();
            for (const auto& [name, role] : pf.roles)
                roles[name] = std::string(to_string(role));
            block["roles"] = std::move(roles);
        }
        {
            JsonValue est = JsonValue::array();
            for (const auto& e : pf.fit.estimates) {
                JsonValue item = JsonValue::object();
                item["param"] = e.label;
                item["value"] = e.value;
                est.push_back(std::move(item));
            }
            block["estimates"] = std::move(est);
        }
        {
            JsonValue fs = JsonValue::object();
            fs["chi_square"] = pf.fit.stats.chi_square;
            fs["df"] = pf.fit.stats.df;
            fs["p_value"] = pf.fit.stats.p_value;
            fs["f_min"] = pf.fit.stats.f_min;
            fs["n"] = static_cast<long>(pf.fit.stats.n);
            fs["converged"] = pf.fit.stats.converged;
            fs["iterations"] = pf.fit.stats.iterations;
            block["fit"] = std::move(fs);
        }
        {
            JsonValue nf = JsonValue::object();
            nf["chi_square"] = pf.null_fit.chi_square;
            nf["df"] = pf.null_fit.df;
            nf["p_value"] = pf.null_fit.p_value;
            block["null_fit"] = std::move(nf);
        }
        {
            JsonValue ix = JsonValue::object();
            ix["cmin_df"] = json_or_null(pf.indices.cmin_df);
            ix["gfi"] = json_or_null(pf.indices.gfi);
            ix["agfi"] = json_or_null(pf.indices.agfi);
            ix["rmr"] = json_or_null(pf.indices.rmr);
            ix["rmsea"] = json_or_null(pf.indices.rmsea);
            ix["nfi"] = json_or_null(pf.indices.nfi);
            ix["tli"] = json_or_null(pf.indices.tli);
            ix["cfi"] = json_or_null(pf.indices.cfi);
            block["indices"] = std::move(ix);
        }
        {
            JsonValue verdicts = JsonValue::array();
            for (const auto& v : pf.verdicts) {
                JsonValue item = JsonValue::object();
                item["index"] = v.index;
                item["value"] = json_or_null(v.value);
                item["verdict"] = std::string(to_string(v.verdict));
                item["threshold"] = v.threshold;
                verdicts.push_back(std::move(item));
            }
            block["verdicts"] = std::move(verdicts);
        }
        root["pathfit"] = std::move(block);
    }

    if (r.model) {
        const auto& m = *r.model;
        JsonValue block = JsonValue::object();
        JsonValue vars = JsonValue::array();
        for (const auto& v : m.spec.variables) vars.push_back(v);
        block["variables"] = std::move(vars);
        JsonValue roles = JsonValue::object();
        for (const auto& [name, role] : m.roles) roles[name] = std::string(to_string(role));
        block["roles"] = std::move(roles);
        JsonValue regs = JsonValue::array();
        for (const auto& reg : m.spec.regressions) {
            JsonValue item = JsonValue::object();
            item["outcome"] = reg.outcome;
            JsonValue preds = JsonValue::array();
            for (const auto& p : reg.predictors) preds.push_back(p);
            item["predictors"] = std::move(preds);
            regs.push_back(std::move(item));
        }
        block["regressions"] = std::move(regs);
        JsonValue covs = JsonValue::array();
        for (const auto& [a, b] : m.spec.covariances) {
            JsonValue pair = JsonValue::array();
            pair.push_back(a);
            pair.push_back(b);
            covs.push_back(std::move(pair));
        }
        block["covariances"] = std::move(covs);
        root["model"] = std::move(block);
    }

    if (r.simulation) {
        const auto& sim = *r.simulation;
        JsonValue block = JsonValue::object();
        {
            JsonValue d = JsonValue::object();
            d["a"] = sim.design.a;
            d["b"] = sim.design.b;
            d["tau_prime"] = sim.design.tau_prime;
            d["sd_x"] = sim.design.sd_x;
            d["sd_e2"] = sim.design.sd_e2;
            d["sd_e1"] = sim.design.sd_e1;
            d["n"] = static_cast<long>(sim.design.n);
            d["R"] = sim.design.R;
            d["seed"] = static_cast<unsigned long long>(sim.design.seed);
            d["level"] = sim.design.level;
            d["B"] = sim.design.B;
            d["draws"] = sim.design.draws;
            JsonValue methods = JsonValue::array();
            for (const CiMethod m : sim.design.methods)
                methods.push_back(std::string(to_string(m)));
            d["methods"] = std::move(methods);
            block["design"] = std::move(d);
        }
        block["true_indirect"] = sim.report.true_indirect;
        {
            JsonValue reps = JsonValue::object();
            reps["requested"] = sim.report.replications_requested;
            reps["used"] = sim.report.replications_used;
            reps["skipped"] = sim.report.degenerate_skipped;
            block["replications"] = std::move(reps);
        }
        {
            JsonValue est = JsonValue::object();
            est["mean"] = sim.report.mean_estimate;
            est["bias"] = sim.report.bias;
            est["empirical_sd"] = sim.report.empirical_sd;
            est["mean_sobel_se"] = sim.report.mean_sobel_se;
            est["se_relative_bias"] = sim.report.se_relative_bias;
            block["estimate"] = std::move(est);
        }
        {
            JsonValue methods = JsonValue::object();
            for (const auto& [method, summary] : sim.report.methods) {
                JsonValue s = JsonValue::object();
                s["coverage"] = summary.coverage;
                s["miss_below"] = summary.miss_below;
                s["miss_above"] = summary.miss_above;
                s["rejection"] = summary.rejection;
                methods[to_string(method)] = std::move(s);
            }
            block["methods"] = std::move(methods);
        }
        root["simulation"] = std::move(block);
    }

    return root;
}

inline std::string render_text(const AnalysisReport& r) {
    using detail::fmt;
    using detail::fmt_opt;
    std::ostringstream os;
    char line[200];

    if (r.model) {
        os << "Model (" << (r.model_path.empty() ? "<inline>" : r.model_path) << ")\n";
        for (const auto& reg : r.model->spec.regressions) {
            os << "  " << reg.outcome << " ~ ";
            for (std::size_t i = 0; i < reg.predictors.size(); ++i)
                os << (i ? " + " : "") << reg.predictors[i];
            os << '\n';
        }
        for (const auto& [a, b] : r.model->spec.covariances)
            os << "  " << a << " ~~ " << b << '\n';
        os << "Roles\n";
        for (const auto& v : r.model->spec.variables)
            os << "  " << v << ": " << to_string(r.model->roles.at(v)) << '\n';
    }

    if (r.mediation) {
        const auto& m = *r.mediation;
        os << "Mediation analysis: " << m.fit.x << " -> " << m.fit.m << " -> " << m.fit.y
           << "   (n = " << m.fit.n << ")\n\n";
        detail::text_equation(os, "eq1", m.fit.eq1, m.fit.y);
        detail::text_equation(os, "eq2", m.fit.eq2, m.fit.y);
        detail::text_equation(os, "eq3", m.fit.eq3, m.fit.m);
        os << "\nEffects\n";
        std::snprintf(line, sizeof line, "  %-28s %12s\n", "direct (tau')",
                      fmt(m.effects.direct).c_str());
        os << line;
        std::snprintf(line, sizeof line, "  %-28s %12s\n", "indirect (b3*bM)",
                      fmt(m.effects.indirect_product).c_str());
        os << line;
        std::snprintf(line, sizeof line, "  %-28s %12s\n", "indirect (b1-b2)",
                      fmt(m.effects.indirect_difference).c_str());
        os << line;
        std::snprintf(line, sizeof line, "  %-28s %12s\n", "total (eq1)",
                      fmt(m.effects.total_eq1).c_str());
        os << line;
        std::snprintf(line, sizeof line, "  %-28s %12s\n", "total (direct+indirect)",
                      fmt(m.effects.total_composed).c_str());
        os << line;
        os << "\nCausal steps (alpha = " << fmt(m.verdict.alpha) << ")\n";
        const char* step_names[4] = {"1: beta1 significant (eq1)",
                                     "2: beta3 significant (eq3)",
                                     "3: betaM significant (eq2)",
                                     "4: |beta1| > |beta2|"};
        for (int i = 0; i < 4; ++i)
            os << "  step " << step_names[i] << ": "
               << (m.verdict.step_results[static_cast<std::size_t>(i)] ? "pass" : "fail")
               << '\n';
        os << "  outcome: " << to_string(m.verdict.outcome);
        if (m.verdict.failed_step > 0) os << " (failed at step " << m.verdict.failed_step << ")";
        os << "\n  consistency: " << to_string(m.verdict.consistency) << '\n';
        os << "  note: " << m.verdict.note << '\n';
        os << "\nDiagnostics\n";
        os << "  XM interaction: estimate " << fmt(m.diagnostics.interaction_coef) << ", t "
           << fmt(m.diagnostics.interaction_t) << ", p "
           << fmt(m.diagnostics.interaction_p, "%.4g")
           << (m.diagnostics.interaction_significant ? " (significant)" : " (not significant)")
           << '\n';
        os << "  residual correlation eq2/eq3 (descriptive): "
           << fmt(m.diagnostics.residual_correlation) << '\n';
        os << "  untestable assumptions:\n";
        for (const auto& u : m.diagnostics.untestable) os << "    - " << u << '\n';
        if (!m.advisories.empty()) {
            os << "  advisories:\n";
            for (const auto& a : m.advisories) os << "    - " << a << '\n';
        }
    }

    if (r.inference) {
        const auto& inf = *r.inference;
        os << "\nMediated effect inference\n";
        os << "  point estimate (b3*bM): " << fmt(inf.point) << '\n';
        os << "  sobel se: " << fmt(inf.se) << "   exact-variance se: " << fmt(inf.se_exact)
           << '\n';
        if (inf.sobel)
            os << "  sobel z: " << fmt(inf.sobel->z) << "   p: " << fmt(inf.sobel->p, "%.4g")
               << '\n';
        for (const auto& ci : inf.intervals) {
            std::snprintf(line, sizeof line, "  %-20s %4.0f%% CI [%s, %s]\n",
                          to_string(ci.method), ci.level * 100, fmt(ci.lower).c_str(),
                          fmt(ci.upper).c_str());
            os << line;
            if (ci.method != CiMethod::Normal)
                os << "      (" << ci.meta.used << " of " << ci.meta.replicates
                   << " replicates used, seed " << ci.meta.seed << ")\n";
        }
    }

    if (r.pathfit) {
        const auto& pf = *r.pathfit;
        os << "Path model fit (" << r.model_path << " on " << r.data_path << ")\n";
        os << "  variables:";
        for (const auto& v : pf.spec.variables) os << ' ' << v;
        os << "\n\nEstimates\n";
        for (const auto& e : pf.fit.estimates) {
            std::snprintf(line, sizeof line, "  %-20s %12s\n", e.label.c_str(),
                          fmt(e.value).c_str());
            os << line;
        }
        os << "\nFit statistics\n";
        os << "  chi-square " << fmt(pf.fit.stats.chi_square) << " on " << pf.fit.stats.df
           << " df, p = " << fmt(pf.fit.stats.p_value, "%.4g") << '\n';
        os << "  F_min " << fmt(pf.fit.stats.f_min) << ", n = " << pf.fit.stats.n
           << ", iterations = " << pf.fit.stats.iterations
           << (pf.fit.stats.converged ? "" : " (NOT converged)") << '\n';
        os << "  null model: chi-square " << fmt(pf.null_fit.chi_square) << " on "
           << pf.null_fit.df << " df\n";
        os << "\nFit indices\n";
        std::snprintf(line, sizeof line, "  %-24s %10s  %-10s %s\n", "index", "value",
                      "verdict", "threshold");
        os << line;
        for (const auto& v : pf.verdicts) {
            std::snprintf(line, sizeof line, "  %-24s %10s  %-10s %s\n", v.index.c_str(),
                          fmt_opt(v.value, "%.4f").c_str(), to_string(v.verdict),
                          v.threshold.c_str());
            os << line;
        }
    }

    if (r.simulation) {
        const auto& sim = *r.simulation;
        os << "Simulation study\n";
        os << "  design: a = " << fmt(sim.design.a) << ", b = " << fmt(sim.design.b)
           << ", tau' = " << fmt(sim.design.tau_prime) << ", n = " << sim.design.n
           << ", R = " << sim.design.R << ", seed = " << sim.design.seed << '\n';
        os << "  true indirect effect: " << fmt(sim.report.true_indirect) << '\n';
        os << "  replications used: " << sim.report.replications_used << " ("
           << sim.report.degenerate_skipped << " skipped)\n";
        os << "\nEstimator (b3*bM)\n";
        os << "  mean " << fmt(sim.report.mean_estimate) << ", bias " << fmt(sim.report.bias)
           << ", empirical sd " << fmt(sim.report.empirical_sd) << '\n';
        os << "  mean sobel se " << fmt(sim.report.mean_sobel_se) << " (relative bias "
           << fmt(sim.report.se_relative_bias) << ")\n";
        if (!sim.report.methods.empty()) {
            os << "\nInterval methods (level " << fmt(sim.design.level) << ")\n";
            std::snprintf(line, sizeof line, "  %-20s %10s %10s %10s %10s\n", "method",
                          "coverage", "miss_below", "miss_above", "rejection");
            os << line;
            for (const auto& [method, s] : sim.report.methods) {
                std::snprintf(line, sizeof line, "  %-20s %10s %10s %10s %10s\n",
                              to_string(method), fmt(s.coverage, "%.4f").c_str(),
                              fmt(s.miss_below, "%.4f").c_str(),
                              fmt(s.miss_above, "%.4f").c_str(),
                              fmt(s.rejection, "%.4f").c_str());
                os << line;
            }
        }
    }

    return os.str();
}

inline std::string render_report(const AnalysisReport& r, bool as_json) {
    if (as_json) return report_to_json(r).dump() + "\n";
    return render_text(r);
}

}  // namespace pathmed
