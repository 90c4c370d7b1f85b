#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pathmed/data_io.hpp"
#include "pathmed/errors.hpp"
#include "pathmed/model_dsl.hpp"
#include "pathmed/ols.hpp"

// Single-mediator model X -> M -> Y. Three regressions carry everything:
//
//   eq1:  Y = a1 + beta1*X            total effect
//   eq2:  Y = a2 + beta2*X + betaM*M  direct effect, adjusted for M
//   eq3:  M = a3 + beta3*X            action of X on the mediator
//
// Under OLS the two mediated-effect measures coincide:
// beta1 - beta2 == beta3 * betaM.

namespace pathmed {

struct MediationFit {
    std::string x, m, y;
    OlsFit eq1, eq2, eq3;
    double beta1 = 0, se1 = 0;
    double beta2 = 0, se2 = 0;
    double betaM = 0, seM = 0;
    double beta3 = 0, se3 = 0;
    Eigen::Index n = 0;
};

struct EffectDecomposition {
    double direct = 0;               // tau' = beta2
    double indirect_product = 0;     // beta3 * betaM
    double indirect_difference = 0;  // beta1 - beta2
    double total_eq1 = 0;            // beta1
    double total_composed = 0;       // direct + indirect_product
};

enum class MediationOutcome { NoMediation, CompleteMediation, PartialMediation };
enum class Consistency { Consistent, Inconsistent };

inline const char* to_string(MediationOutcome o) {
    switch (o) {
        case MediationOutcome::NoMediation: return "NoMediation";
        case MediationOutcome::CompleteMediation: return "CompleteMediation";
        default: return "PartialMediation";
    }
}
inline const char* to_string(Consistency c) {
    return c == Consistency::Consistent ? "Consistent" : "Inconsistent";
}

struct CausalStepsVerdict {
    std::array<bool, 4> step_results{};
    double alpha = 0.05;
    MediationOutcome outcome = MediationOutcome::NoMediation;
    int failed_step = 0;  // 1..4 when outcome is NoMediation, else 0
    Consistency consistency = Consistency::Consistent;
    std::string note;
};

struct AssumptionDiagnostics {
    double interaction_coef = 0;  // coefficient of X*M added to eq2
    double interaction_se = 0;
    double interaction_t = 0;
    double interaction_p = 1;
    bool interaction_significant = false;
    double residual_correlation = 0;  // eq2 vs eq3 residuals, descriptive only
    std::vector<std::string> untestable;
};

inline MediationFit fit_mediation(const Dataset& data, const std::string& x,
                                  const std::string& m, const std::string& y) {
    if (x == m || x == y || m == y)
        throw usage_error("fit_mediation: x, m, y must name distinct columns");
    const Eigen::VectorXd xv = data.column(x);
    const Eigen::VectorXd mv = data.column(m);
    const Eigen::VectorXd yv = data.column(y);
    if (data.n() < 5)
        throw too_few_rows("fit_mediation: need at least 5 rows, got " +
                           std::to_string(data.n()));

    MediationFit fit;
    fit.x = x;
    fit.m = m;
    fit.y = y;
    fit.n = data.n();

    Eigen::MatrixXd X1(data.n(), 1);
    X1.col(0) = xv;
    fit.eq1 = ols_fit(yv, X1, {x});

    Eigen::MatrixXd X2(data.n(), 2);
    X2.col(0) = xv;
    X2.col(1) = mv;
    fit.eq2 = ols_fit(yv, X2, {x, m});

    fit.eq3 = ols_fit(mv, X1, {x});

    fit.beta1 = fit.eq1.slope(x);
    fit.se1 = fit.eq1.slope_se(x);
    fit.beta2 = fit.eq2.slope(x);
    fit.se2 = fit.eq2.slope_se(x);
    fit.betaM = fit.eq2.slope(m);
    fit.seM = fit.eq2.slope_se(m);
    fit.beta3 = fit.eq3.slope(x);
    fit.se3 = fit.eq3.slope_se(x);
    return fit;
}

inline EffectDecomposition decompose_effects(const MediationFit& fit) {
    EffectDecomposition d;
    d.direct = fit.beta2;
    d.indirect_product = fit.beta3 * fit.betaM;
    d.indirect_difference = fit.beta1 - fit.beta2;
    d.total_eq1 = fit.beta1;
    d.total_composed = d.direct + d.indirect_product;
    return d;
}

/// Inconsistent (suppression) pattern: mediated and direct effects of
/// opposite sign, both clearing the magnitude floor `tol`.
inline Consistency classify_consistency(const EffectDecomposition& dec, double tol = 1e-8) {
    if (tol < 0) throw usage_error("classify_consistency: tol must be nonnegative");
    const double ind = dec.indirect_product;
    const double dir = dec.direct;
    if (std::fabs(ind) > tol && std::fabs(dir) > tol &&
        std::signbit(ind) != std::signbit(dir))
        return Consistency::Inconsistent;
    return Consistency::Consistent;
}

/// Baron-Kenny four-step procedure at significance level `alpha`:
///   1. beta1 significant in eq1
///   2. beta3 significant in eq3
///   3. betaM significant in eq2
///   4. |beta1| > |beta2| (the X coefficient shrinks once M enters)
/// Complete mediation additionally requires a nonsignificant beta2.
inline CausalStepsVerdict causal_steps(const MediationFit& fit, double alpha = 0.05) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_alpha(alpha);

    CausalStepsVerdict v;
    v.alpha = alpha;
    v.step_results[0] = fit.eq1.slope_p(fit.x) < alpha;
    v.step_results[1] = fit.eq3.slope_p(fit.x) < alpha;
    v.step_results[2] = fit.eq2.slope_p(fit.m) < alpha;
    v.step_results[3] = std::fabs(fit.beta1) > std::fabs(fit.beta2);
    v.consistency = classify_consistency(decompose_effects(fit));

    const bool beta2_significant = fit.eq2.slope_p(fit.x) < alpha;
    if (!v.step_results[0]) {
        v.outcome = MediationOutcome::NoMediation;
        v.failed_step = 1;
        v.note =
            "total effect of X on Y is not significant; mediation may still be present "
            "when direct and mediated effects oppose each other (inconsistent model)";
    } else if (!v.step_results[1]) {
        v.outcome = MediationOutcome::NoMediation;
        v.failed_step = 2;
        v.note = "X does not significantly predict the mediator";
    } else if (!v.step_results[2]) {
        v.outcome = MediationOutcome::NoMediation;
        v.failed_step = 3;
        v.note = "mediator does not significantly predict Y adjusting for X";
    } else if (!beta2_significant) {
        v.outcome = MediationOutcome::CompleteMediation;
        v.note = "direct effect is nonsignificant once the mediator is included";
    } else if (v.step_results[3]) {
        v.outcome = MediationOutcome::PartialMediation;
        v.note = "direct effect remains significant but shrinks in magnitude";
    } else {
        v.outcome = MediationOutcome::NoMediation;
        v.failed_step = 4;
        v.note = "X coefficient does not shrink when the mediator is added";
    }
    return v;
}

/// Testable-in-part diagnostics for the single-mediator model. The XM
/// interaction enters the outcome equation; residual independence between
/// the two structural equations is reported as a plain correlation because
/// no sharp test exists for it.
inline AssumptionDiagnostics check_assumptions(const MediationFit& fit, const Dataset& data,
                                               double alpha = 0.05) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_alpha(alpha);

    const Eigen::VectorXd xv = data.column(fit.x);
    const Eigen::VectorXd mv = data.column(fit.m);
    const Eigen::VectorXd yv = data.column(fit.y);

    AssumptionDiagnostics diag;

    Eigen::MatrixXd X(data.n(), 3);
    X.col(0) = xv;
    X.col(1) = mv;
    X.col(2) = xv.cwiseProduct(mv);
    const std::string xm = fit.x + ":" + fit.m;
    const OlsFit aug = ols_fit(yv, X, {fit.x, fit.m, xm});
    diag.interaction_coef = aug.slope(xm);
    diag.interaction_se = aug.slope_se(xm);
    diag.interaction_t = aug.slope_t(xm);
    diag.interaction_p = aug.slope_p(xm);
    diag.interaction_significant = diag.interaction_p < alpha;

    const Eigen::VectorXd& r2 = fit.eq2.residuals;
    const Eigen::VectorXd& r3 = fit.eq3.residuals;
    const double s2 = (r2.array() - r2.mean()).matrix().norm();
    const double s3 = (r3.array() - r3.mean()).matrix().norm();
    diag.residual_correlation =
        (s2 > 0 && s3 > 0)
            ? ((r2.array() - r2.mean()) * (r3.array() - r3.mean())).sum() / (s2 * s3)
            : 0.0;

    diag.untestable = {
        "no unmeasured confounding of the X-M, X-Y, or M-Y relations",
        "causal order is X -> M -> Y rather than reversed or mutual",
        "X, M, and Y are measured without error",
    };
    return diag;
}

/// Sample-size guidance for mediated-effect standard errors: n >= 50 for a
/// single mediator, n in the 100-200 range once several mediators are in play.
inline std::vector<std::string> sample_size_advisory(
    const std::map<std::string, VariableRole>& roles, Eigen::Index n) {
    long mediators = 0;
    for (const auto& [name, role] : roles)
        if (role == VariableRole::mediator) ++mediators;

    std::vector<std::string> warnings;
    if (mediators == 1 && n < 50)
        warnings.push_back("n=" + std::to_string(n) +
                           ": the mediated-effect standard error is biased in single-mediator "
                           "models below n=50");
    if (mediators >= 2 && n < 100)
        warnings.push_back("n=" + std::to_string(n) + ": with " + std::to_string(mediators) +
                           " mediators the standard error needs n of 100-200 to be accurate "
                           "(200 is the upper guidance bound)");
    return warnings;
}

}  // namespace pathmed
