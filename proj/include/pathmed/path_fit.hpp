#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pathmed/data_io.hpp"
#include "pathmed/errors.hpp"
#include "pathmed/model_dsl.hpp"
#include "pathmed/special_functions.hpp"

// Maximum-likelihood fitting of recursive path models. The implied
// covariance follows the usual structural algebra
//
//   Sigma(theta) = (I - A)^-1 S_params (I - A)^-T
//
// where A holds the directed coefficients and S_params the exogenous
// variances/covariances plus disturbance variances (disturbance loadings
// fixed at 1). The discrepancy minimized is
//
//   F(theta) = ln|Sigma| + tr(S Sigma^-1) - ln|S| - p,
//
// and (n-1) * F(theta_hat) is the model chi-square.

namespace pathmed {

struct PathModelMatrices {
    enum class Slot { PathA, CovS };
    struct FreeParam {
        Slot slot;
        int i, j;
        std::string label;
    };

    std::vector<std::string> variables;
    Eigen::MatrixXd A;  // A(i,j) = coefficient of arrow j -> i
    Eigen::MatrixXd S;  // symmetric parameter matrix
    std::vector<FreeParam> free;

    int parameter_count() const { return static_cast<int>(free.size()); }

    void set_theta(const Eigen::VectorXd& theta) {
        for (std::size_t k = 0; k < free.size(); ++k) {
            const auto& f = free[k];
            const double v = theta(static_cast<Eigen::Index>(k));
            if (f.slot == Slot::PathA) {
                A(f.i, f.j) = v;
            } else {
                S(f.i, f.j) = v;
                S(f.j, f.i) = v;
            }
        }
    }

    Eigen::VectorXd theta() const {
        Eigen::VectorXd t(parameter_count());
        for (std::size_t k = 0; k < free.size(); ++k) {
            const auto& f = free[k];
            t(static_cast<Eigen::Index>(k)) =
                f.slot == Slot::PathA ? A(f.i, f.j) : S(f.i, f.j);
        }
        return t;
    }
};

/// Lay out the free-parameter map for a parsed model: one A slot per arrow,
/// variances for exogenous variables, declared exogenous covariances, and a
/// disturbance variance per endogenous variable.
inline PathModelMatrices build_matrices(const ModelSpec& spec) {
    PathModelMatrices m;
    m.variables = spec.variables;
    const int p = static_cast<int>(spec.variables.size());
    m.A = Eigen::MatrixXd::Zero(p, p);
    m.S = Eigen::MatrixXd::Zero(p, p);

    const auto index_of = [&](const std::string& v) {
        return static_cast<int>(std::find(m.variables.begin(), m.variables.end(), v) -
                                m.variables.begin());
    };

    for (const auto& r : spec.regressions) {
        const int i = index_of(r.outcome);
        for (const auto& pred : r.predictors)
            m.free.push_back({PathModelMatrices::Slot::PathA, i, index_of(pred),
                              r.outcome + " ~ " + pred});
    }
    const auto roles = classify_roles(spec);
    for (const auto& v : spec.variables)
        if (roles.at(v) == VariableRole::exogenous)
            m.free.push_back(
                {PathModelMatrices::Slot::CovS, index_of(v), index_of(v), v + " ~~ " + v});
    for (const auto& [a, b] : spec.covariances)
        m.free.push_back(
            {PathModelMatrices::Slot::CovS, index_of(a), index_of(b), a + " ~~ " + b});
    for (const auto& v : spec.variables)
        if (roles.at(v) != VariableRole::exogenous)
            m.free.push_back(
                {PathModelMatrices::Slot::CovS, index_of(v), index_of(v), v + " ~~ " + v});
    return m;
}

namespace detail {

// Kahn's algorithm over the nonzero pattern of A (edges j -> i).
inline void require_acyclic(const Eigen::MatrixXd& A) {
    const Eigen::Index p = A.rows();
    std::vector<int> indegree(static_cast<std::size_t>(p), 0);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            if (A(i, j) != 0.0) ++indegree[static_cast<std::size_t>(i)];
    std::vector<Eigen::Index> queue;
    for (Eigen::Index i = 0; i < p; ++i)
        if (indegree[static_cast<std::size_t>(i)] == 0) queue.push_back(i);
    std::size_t processed = 0;
    while (!queue.empty()) {
        const Eigen::Index j = queue.back();
        queue.pop_back();
        ++processed;
        for (Eigen::Index i = 0; i < p; ++i)
            if (A(i, j) != 0.0 && --indegree[static_cast<std::size_t>(i)] == 0)
                queue.push_back(i);
    }
    if (processed != static_cast<std::size_t>(p))
        throw cycle_error("coefficient matrix is not permutable to lower triangular");
}

}  // namespace detail

/// Model-implied covariance Sigma = (I-A)^-1 S (I-A)^-T.
inline Eigen::MatrixXd implied_covariance(const PathModelMatrices& m) {
    detail::require_acyclic(m.A);
    const Eigen::Index p = m.A.rows();
    const Eigen::MatrixXd B =
        (Eigen::MatrixXd::Identity(p, p) - m.A).partialPivLu().inverse();
    Eigen::MatrixXd sigma = B * m.S * B.transpose();
    return ((sigma + sigma.transpose()) * 0.5).eval();
}

struct FitStatistics {
    double chi_square = 0;
    long df = 0;
    double p_value = 1;
    double f_min = 0;
    Eigen::Index n = 0;
    int p = 0;  // observed variables
    bool converged = true;
    int iterations = 0;
};

struct ParameterEstimate {
    std::string label;
    double value = 0;
};

struct MlFit {
    std::vector<ParameterEstimate> estimates;
    FitStatistics stats;
    Eigen::MatrixXd implied;      // in `variables` order
    Eigen::MatrixXd sample;       // sample covariance in the same order
    std::vector<std::string> variables;
};

/// The ML discrepancy and its analytic gradient, exposed separately so the
/// two can be cross-checked against finite differences.
class MlObjective {
public:
    MlObjective(PathModelMatrices mats, Eigen::MatrixXd sample_cov)
        : mats_(std::move(mats)), S_(std::move(sample_cov)) {
        p_ = static_cast<int>(S_.rows());
        const Eigen::LLT<Eigen::MatrixXd> llt(S_);
        if (llt.info() != Eigen::Success)
            throw not_positive_definite("sample covariance matrix is not positive definite");
        log_det_S_ = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }

    int dimension() const { return mats_.parameter_count(); }
    const PathModelMatrices& matrices() const { return mats_; }
    const Eigen::MatrixXd& sample() const { return S_; }

    /// F(theta); +infinity when Sigma(theta) is not positive definite.
    double value(const Eigen::VectorXd& theta) const {
        mats_.set_theta(theta);
        const Eigen::MatrixXd sigma = implied_covariance(mats_);
        const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success)
            return std::numeric_limits<double>::infinity();
        const double log_det =
            2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        const double trace = llt.solve(S_).trace();
        return log_det + trace - log_det_S_ - static_cast<double>(p_);
    }

    /// Analytic gradient. dF = tr(W dSigma) with W = Sigma^-1 (Sigma - S)
    /// Sigma^-1 gives, per slot: 2 (B' W Sigma)_ij for arrows, (B' W B)_ii
    /// for variances and 2 (B' W B)_ij for covariances.
    Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const {
        mats_.set_theta(theta);
        const Eigen::Index p = S_.rows();
        const Eigen::MatrixXd B =
            (Eigen::MatrixXd::Identity(p, p) - mats_.A).partialPivLu().inverse();
        Eigen::MatrixXd sigma = B * mats_.S * B.transpose();
        sigma = ((sigma + sigma.transpose()) * 0.5).eval();
        const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success)
            return Eigen::VectorXd::Constant(dimension(),
                                             std::numeric_limits<double>::quiet_NaN());
        const Eigen::MatrixXd sigma_inv =
            llt.solve(Eigen::MatrixXd::Identity(p, p));
        Eigen::MatrixXd W = sigma_inv - sigma_inv * S_ * sigma_inv;
        W = ((W + W.transpose()) * 0.5).eval();

        const Eigen::MatrixXd GA = 2.0 * B.transpose() * W * sigma;
        const Eigen::MatrixXd GS = B.transpose() * W * B;

        Eigen::VectorXd g(dimension());
        for (std::size_t k = 0; k < mats_.free.size(); ++k) {
            const auto& f = mats_.free[k];
            if (f.slot == PathModelMatrices::Slot::PathA)
                g(static_cast<Eigen::Index>(k)) = GA(f.i, f.j);
            else
                g(static_cast<Eigen::Index>(k)) =
                    f.i == f.j ? GS(f.i, f.i) : 2.0 * GS(f.i, f.j);
        }
        return g;
    }

    Eigen::VectorXd numeric_gradient(const Eigen::VectorXd& theta) const {
        Eigen::VectorXd g(dimension());
        Eigen::VectorXd t = theta;
        for (Eigen::Index k = 0; k < t.size(); ++k) {
            const double h = 1e-6 * std::max(1.0, std::fabs(theta(k)));
            t(k) = theta(k) + h;
            const double fp = value(t);
            t(k) = theta(k) - h;
            const double fm = value(t);
            t(k) = theta(k);
            g(k) = (fp - fm) / (2.0 * h);
        }
        return g;
    }

private:
    mutable PathModelMatrices mats_;
    Eigen::MatrixXd S_;
    double log_det_S_ = 0;
    int p_ = 0;
};

namespace detail {

// Equation-wise OLS from the covariance matrix; exact for just-identified
// recursive models, a good start otherwise.
inline Eigen::VectorXd ml_starting_values(const PathModelMatrices& mats,
                                          const ModelSpec& spec,
                                          const Eigen::MatrixXd& S) {
    const auto index_of = [&](const std::string& v) {
        return static_cast<Eigen::Index>(
            std::find(mats.variables.begin(), mats.variables.end(), v) -
            mats.variables.begin());
    };

    PathModelMatrices work = mats;
    work.A.setZero();
    work.S.setZero();

    std::vector<double> resid_var(mats.variables.size(), 0.0);
    for (const auto& r : spec.regressions) {
        const Eigen::Index o = index_of(r.outcome);
        const auto k = static_cast<Eigen::Index>(r.predictors.size());
        Eigen::MatrixXd Spp(k, k);
        Eigen::VectorXd spo(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            const Eigen::Index ia = index_of(r.predictors[static_cast<std::size_t>(a)]);
            spo(a) = S(ia, o);
            for (Eigen::Index b = 0; b < k; ++b)
                Spp(a, b) = S(ia, index_of(r.predictors[static_cast<std::size_t>(b)]));
        }
        const Eigen::VectorXd beta = Spp.ldlt().solve(spo);
        for (Eigen::Index a = 0; a < k; ++a)
            work.A(o, index_of(r.predictors[static_cast<std::size_t>(a)])) = beta(a);
        resid_var[static_cast<std::size_t>(o)] =
            std::max(1e-8, S(o, o) - spo.dot(beta));
    }

    const auto roles = classify_roles(spec);
    for (const auto& v : spec.variables) {
        const Eigen::Index i = index_of(v);
        if (roles.at(v) == VariableRole::exogenous)
            work.S(i, i) = S(i, i);
        else
            work.S(i, i) = resid_var[static_cast<std::size_t>(i)];
    }
    for (const auto& [a, b] : spec.covariances) {
        const Eigen::Index i = index_of(a);
        const Eigen::Index j = index_of(b);
        work.S(i, j) = work.S(j, i) = S(i, j);
    }
    return work.theta();
}

struct BfgsResult {
    Eigen::VectorXd theta;
    double f = 0;
    Eigen::VectorXd grad;
    int iterations = 0;
    bool converged = false;
};

// BFGS with backtracking line search. Steps that leave the positive-definite
// region are rejected because value() returns +infinity there. Falls back to
// the numeric gradient if the analytic one goes non-finite.
inline BfgsResult bfgs_minimize(const MlObjective& obj, Eigen::VectorXd theta,
                                int max_iterations = 500, double grad_tol = 1e-8,
                                double f_tol = 1e-12) {
    const auto grad_of = [&](const Eigen::VectorXd& t) {
        Eigen::VectorXd g = obj.gradient(t);
        if (!g.allFinite()) g = obj.numeric_gradient(t);
        return g;
    };

    const Eigen::Index d = theta.size();
    BfgsResult res;
    double f = obj.value(theta);
    if (!std::isfinite(f))
        throw non_convergence("starting values give a non-positive-definite covariance");
    Eigen::VectorXd g = grad_of(theta);
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(d, d);

    int it = 0;
    bool converged = g.lpNorm<Eigen::Infinity>() < grad_tol;
    while (!converged && it < max_iterations) {
        ++it;
        Eigen::VectorXd dir = -(H * g);
        double slope = g.dot(dir);
        if (!(slope < 0)) {  // reset a corrupted approximation
            H.setIdentity();
            dir = -g;
            slope = g.dot(dir);
        }

        double step = 1.0;
        double f_new = std::numeric_limits<double>::infinity();
        Eigen::VectorXd theta_new;
        bool accepted = false;
        while (step > 1e-16) {
            theta_new = theta + step * dir;
            f_new = obj.value(theta_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // stalled; acceptable only if already essentially at the optimum
            converged = g.lpNorm<Eigen::Infinity>() < 1e-6;
            break;
        }

        const Eigen::VectorXd g_new = grad_of(theta_new);
        const Eigen::VectorXd s = theta_new - theta;
        const Eigen::VectorXd yv = g_new - g;
        const double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
            H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) +
                rho * s * s.transpose();
        }

        const double f_change = std::fabs(f - f_new);
        theta = std::move(theta_new);
        f = f_new;
        g = g_new;
        if (g.lpNorm<Eigen::Infinity>() < grad_tol ||
            f_change < f_tol * std::max(1.0, std::fabs(f))) {
            converged = true;
        }
    }

    res.theta = std::move(theta);
    res.f = f;
    res.grad = std::move(g);
    res.iterations = it;
    res.converged = converged;
    return res;
}

}  // namespace detail

/// Fit a recursive path model by maximum likelihood. Moments must cover every
/// model variable; extra columns are ignored.
inline MlFit fit_ml(const ModelSpec& spec, const SampleMoments& moments) {
    validate_against_columns(spec, moments.columns);
    const SampleMoments m = restrict_moments(moments, spec.variables);
    const int p = static_cast<int>(spec.variables.size());

    PathModelMatrices mats = build_matrices(spec);
    const long df =
        static_cast<long>(p) * (p + 1) / 2 - static_cast<long>(mats.parameter_count());
    if (df < 0)
        throw under_identified("model has " + std::to_string(mats.parameter_count()) +
                               " free parameters but only " +
                               std::to_string(p * (p + 1) / 2) + " covariance moments");

    MlObjective obj(mats, m.cov);  // throws not_positive_definite on a bad S
    const Eigen::VectorXd start = detail::ml_starting_values(mats, spec, m.cov);
    const auto res = detail::bfgs_minimize(obj, start);
    if (!res.converged)
        throw non_convergence("ML fit did not converge after " +
                              std::to_string(res.iterations) +
                              " iterations (gradient max " +
                              std::to_string(res.grad.lpNorm<Eigen::Infinity>()) + ")");

    MlFit fit;
    fit.variables = spec.variables;
    fit.sample = m.cov;
    mats.set_theta(res.theta);
    fit.implied = implied_covariance(mats);
    for (std::size_t k = 0; k < mats.free.size(); ++k)
        fit.estimates.push_back(
            {mats.free[k].label, res.theta(static_cast<Eigen::Index>(k))});

    fit.stats.f_min = std::max(0.0, res.f);
    fit.stats.df = df;
    fit.stats.n = m.n;
    fit.stats.p = p;
    fit.stats.chi_square = static_cast<double>(m.n - 1) * fit.stats.f_min;
    fit.stats.p_value = df > 0 ? chi_square_sf(fit.stats.chi_square, static_cast<double>(df))
                               : 1.0;
    fit.stats.converged = res.converged;
    fit.stats.iterations = res.iterations;
    return fit;
}

/// Independence (null) model: variances free, every covariance fixed at zero.
/// Its minimum has the closed form F = ln|diag(S)| - ln|S|.
inline FitStatistics fit_null_model(const SampleMoments& moments) {
    const Eigen::MatrixXd& S = moments.cov;
    const Eigen::Index p = S.rows();
    const Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
        throw not_positive_definite("sample covariance matrix is not positive definite");
    const double log_det_S =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double log_det_diag = S.diagonal().array().log().sum();

    FitStatistics stats;
    stats.f_min = std::max(0.0, log_det_diag - log_det_S);
    stats.df = static_cast<long>(p) * (p - 1) / 2;
    stats.n = moments.n;
    stats.p = static_cast<int>(p);
    stats.chi_square = static_cast<double>(moments.n - 1) * stats.f_min;
    stats.p_value = stats.df > 0
                        ? chi_square_sf(stats.chi_square, static_cast<double>(stats.df))
                        : 1.0;
    stats.converged = true;
    stats.iterations = 0;
    return stats;
}

struct FitIndices {
    std::optional<double> cmin_df;
    std::optional<double> gfi;
    std::optional<double> agfi;
    std::optional<double> rmr;
    std::optional<double> rmsea;
    std::optional<double> nfi;
    std::optional<double> tli;
    std::optional<double> cfi;
    double null_chi_square = 0;
    long null_df = 0;
};

/// The eight-index battery. `moments` and `implied` must share one variable
/// order (fit_ml returns both that way). Indices whose denominator is
/// unavailable (df = 0, or a null model that already fits) come back empty
/// rather than failing.
inline FitIndices compute_indices(const FitStatistics& target, const FitStatistics& null_fit,
                                  const SampleMoments& moments,
                                  const Eigen::MatrixXd& implied) {
    const double chi = target.chi_square;
    const double df = static_cast<double>(target.df);
    const double chi0 = null_fit.chi_square;
    const double df0 = static_cast<double>(null_fit.df);
    const double n = static_cast<double>(target.n);

    FitIndices idx;
    idx.null_chi_square = chi0;
    idx.null_df = null_fit.df;

    if (target.df > 0) idx.cmin_df = chi / df;

    const double gfi_num = std::max((chi - df) / n, 0.0);
    const double gfi_den = std::max((chi0 - df0) / n, 0.0);
    if (gfi_den > 0.0) idx.gfi = std::clamp(1.0 - gfi_num / gfi_den, 0.0, 1.0);

    if (idx.gfi && target.df > 0) idx.agfi = 1.0 - (1.0 - *idx.gfi) * (df0 / df);

    {
        const Eigen::Index p = implied.rows();
        double ss = 0.0;
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = i; j < p; ++j) {
                const double d = moments.cov(i, j) - implied(i, j);
                ss += d * d;
            }
        idx.rmr = std::sqrt(ss / (static_cast<double>(p) * (p + 1) / 2.0));
    }

    if (target.df > 0)
        idx.rmsea = std::sqrt(std::max(chi - df, 0.0) / ((n - 1.0) * df));

    if (chi0 > 0.0) idx.nfi = (chi0 - chi) / chi0;

    if (target.df > 0 && null_fit.df > 0) {
        const double ratio0 = chi0 / df0;
        if (ratio0 != 1.0) idx.tli = (ratio0 - chi / df) / (ratio0 - 1.0);
    }

    {
        const double num = std::max(chi - df, 0.0);
        const double den = std::max({chi - df, chi0 - df0, 0.0});
        idx.cfi = den > 0.0 ? 1.0 - num / den : 1.0;
    }
    return idx;
}

enum class FitVerdict { good, acceptable, poor, not_applicable };

inline const char* to_string(FitVerdict v) {
    switch (v) {
        case FitVerdict::good: return "good";
        case FitVerdict::acceptable: return "acceptable";
        case FitVerdict::poor: return "poor";
        default: return "n/a";
    }
}

struct IndexVerdict {
    std::string index;
    std::optional<double> value;
    FitVerdict verdict = FitVerdict::not_applicable;
    std::string threshold;
};

/// Threshold verdicts. CMIN/DF is reported twice: the liberal reading
/// accepts up to 5, the conservative one draws the line at 2-3.
inline std::vector<IndexVerdict> index_verdicts(const FitIndices& idx) {
    std::vector<IndexVerdict> out;

    const auto push = [&](const std::string& name, const std::optional<double>& value,
                          FitVerdict verdict, const std::string& threshold) {
        out.push_back({name, value, value ? verdict : FitVerdict::not_applicable, threshold});
    };
    const auto at_least = [](const std::optional<double>& v, double cut) {
        return v && *v >= cut ? FitVerdict::good : FitVerdict::poor;
    };

    if (idx.cmin_df) {
        push("cmin/df (liberal)", idx.cmin_df,
             *idx.cmin_df <= 5.0 ? FitVerdict::acceptable : FitVerdict::poor,
             "<= 5 adequate");
        push("cmin/df (conservative)", idx.cmin_df,
             *idx.cmin_df <= 2.0
                 ? FitVerdict::good
                 : (*idx.cmin_df <= 3.0 ? FitVerdict::acceptable : FitVerdict::poor),
             "values above 2-3 not acceptable");
    } else {
        push("cmin/df (liberal)", idx.cmin_df, FitVerdict::not_applicable, "<= 5 adequate");
        push("cmin/df (conservative)", idx.cmin_df, FitVerdict::not_applicable,
             "values above 2-3 not acceptable");
    }
    push("gfi", idx.gfi, at_least(idx.gfi, 0.90), ">= 0.90 good");
    push("agfi", idx.agfi, at_least(idx.agfi, 0.90), ">= 0.90 good");
    push("rmr", idx.rmr, FitVerdict::not_applicable, "smaller is better; no fixed cutoff");
    if (idx.rmsea)
        push("rmsea", idx.rmsea,
             *idx.rmsea <= 0.05
                 ? FitVerdict::good
                 : (*idx.rmsea <= 0.08 ? FitVerdict::acceptable : FitVerdict::poor),
             "<= 0.05 close, 0.05-0.08 acceptable");
    else
        push("rmsea", idx.rmsea, FitVerdict::not_applicable,
             "<= 0.05 close, 0.05-0.08 acceptable");
    push("nfi", idx.nfi, at_least(idx.nfi, 0.90), ">= 0.90 good");
    push("tli", idx.tli, idx.tli && *idx.tli > 0.90 ? FitVerdict::good : FitVerdict::poor,
         "> 0.90 good");
    push("cfi", idx.cfi, at_least(idx.cfi, 0.90), ">= 0.90 good");
    return out;
}

}  // namespace pathmed
