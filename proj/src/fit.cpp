#include "mpm/fit.hpp"

#include "mpm/errors.hpp"
#include "mpm/kernels.hpp"
#include "mpm/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mpm {

namespace {

struct Derivatives {
    double log_likelihood;
    Eigen::VectorXd gradient;          // equation-major
    Eigen::MatrixXd information;       // observed information (= -Hessian)
    double max_event_probability;      // separation diagnostic
};

Eigen::MatrixXd design_with_intercept(const Eigen::MatrixXd& X, Eigen::Index n) {
    Eigen::MatrixXd Z(n, X.cols() + 1);
    Z.col(0).setOnes();
    if (X.cols() > 0) Z.rightCols(X.cols()) = X;
    return Z;
}

Eigen::MatrixXd linear_predictors_of(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& B,
                                     const Eigen::MatrixXd& offsets) {
    Eigen::MatrixXd lp(Z.rows(), B.rows());
    lp.noalias() = Z * B.transpose();
    if (offsets.size() > 0) lp += offsets;
    return lp;
}

Eigen::MatrixXd softmax_of(const Eigen::MatrixXd& lp) {
    const Eigen::Index n = lp.rows();
    const Eigen::Index k1 = lp.cols();
    Eigen::MatrixXd probs(n, k1 + 1);
    std::vector<const double*> lp_cols(static_cast<std::size_t>(k1));
    std::vector<double*> prob_cols(static_cast<std::size_t>(k1 + 1));
    for (Eigen::Index j = 0; j < k1; ++j) lp_cols[static_cast<std::size_t>(j)] = lp.col(j).data();
    for (Eigen::Index c = 0; c <= k1; ++c) prob_cols[static_cast<std::size_t>(c)] = probs.col(c).data();
    kernels::active().softmax(lp_cols.data(), static_cast<std::size_t>(k1), prob_cols.data(),
                              static_cast<std::size_t>(n));
    return probs;
}

double loglik_of(const Eigen::MatrixXd& probs, const std::vector<int>& y,
                 double* max_event_prob = nullptr) {
    double ll = 0.0;
    double pmax = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double p = probs(static_cast<Eigen::Index>(i), y[i]);
        ll += std::log(p);
        pmax = std::max(pmax, p);
    }
    if (max_event_prob) *max_event_prob = pmax;
    return ll;
}

// log-likelihood, score and observed information at B for design Z (with
// intercept) and optional offsets; one-hot outcome columns are prebuilt by
// the caller so bootstrap loops do not rebuild them per iteration.
Derivatives derivatives_at(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& onehot,
                           const std::vector<int>& y, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& offsets) {
    const auto& ops = kernels::active();
    const Eigen::Index n = Z.rows();
    const Eigen::Index m = Z.cols();
    const Eigen::Index k1 = B.rows();
    const Eigen::Index dim = k1 * m;

    const Eigen::MatrixXd lp = linear_predictors_of(Z, B, offsets);
    const Eigen::MatrixXd probs = softmax_of(lp);

    Derivatives out;
    out.log_likelihood = loglik_of(probs, y, &out.max_event_probability);

    out.gradient.resize(dim);
    Eigen::VectorXd resid(n);
    for (Eigen::Index j = 0; j < k1; ++j) {
        resid = onehot.col(j) - probs.col(j + 1);
        for (Eigen::Index a = 0; a < m; ++a)
            out.gradient[j * m + a] =
                ops.dot(resid.data(), Z.col(a).data(), static_cast<std::size_t>(n));
    }

    out.information.setZero(dim, dim);
    Eigen::VectorXd w(n);
    for (Eigen::Index j = 0; j < k1; ++j) {
        for (Eigen::Index l = j; l < k1; ++l) {
            if (j == l)
                w = probs.col(j + 1).cwiseProduct(Eigen::VectorXd::Ones(n) - probs.col(l + 1));
            else
                w = -(probs.col(j + 1).cwiseProduct(probs.col(l + 1)));
            for (Eigen::Index a = 0; a < m; ++a) {
                for (Eigen::Index b = a; b < m; ++b) {
                    const double v = ops.weighted_dot(Z.col(a).data(), Z.col(b).data(),
                                                      w.data(), static_cast<std::size_t>(n));
                    out.information(j * m + a, l * m + b) = v;
                    out.information(l * m + b, j * m + a) = v;
                    out.information(j * m + b, l * m + a) = v;
                    out.information(l * m + a, j * m + b) = v;
                }
            }
        }
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace

GlmFit fit_multinomial_glm(const Eigen::MatrixXd& X, const std::vector<int>& y, int k,
                           const Eigen::MatrixXd& offsets, const GlmOptions& opts) {
    const Eigen::Index n = static_cast<Eigen::Index>(y.size());
    const Eigen::Index q = X.cols();
    const Eigen::Index m = q + 1;
    const Eigen::Index k1 = k - 1;
    if (k < 2) throw DataError("fit: need at least 2 outcome categories");
    if (q > 0 && X.rows() != n)
        throw DataError("fit: design rows do not match outcome length");
    if (offsets.size() > 0 && (offsets.rows() != n || offsets.cols() != k1))
        throw DataError("fit: offsets must be n x (k-1)");

    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int c : y) {
        if (c < 0 || c >= k) throw DataError("fit: outcome index out of range");
        counts[static_cast<std::size_t>(c)]++;
    }
    for (int c = 0; c < k; ++c)
        if (counts[static_cast<std::size_t>(c)] == 0)
            throw PreconditionError("fit: outcome category " + std::to_string(c) +
                                    " has no events");

    // internal standardization for conditioning; mapped back on exit
    Eigen::VectorXd center = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(q);
    Eigen::MatrixXd Xs = X;
    if (opts.standardize && q > 0) {
        for (Eigen::Index a = 0; a < q; ++a) {
            center[a] = X.col(a).mean();
            const double sd = std::sqrt((X.col(a).array() - center[a]).square().sum() /
                                        std::max<double>(1.0, static_cast<double>(n - 1)));
            if (sd < 1e-12)
                throw FitError("rank-deficient design: predictor column " +
                               std::to_string(a) + " is constant");
            scale[a] = sd;
            Xs.col(a) = (X.col(a).array() - center[a]) / sd;
        }
    }
    const Eigen::MatrixXd Z = design_with_intercept(Xs, n);

    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, k1);
    for (Eigen::Index i = 0; i < n; ++i)
        if (y[static_cast<std::size_t>(i)] > 0) onehot(i, y[static_cast<std::size_t>(i)] - 1) = 1.0;

    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k1, m);
    if (offsets.size() == 0) {
        for (Eigen::Index j = 0; j < k1; ++j)
            B(j, 0) = std::log(static_cast<double>(counts[static_cast<std::size_t>(j + 1)]) /
                               static_cast<double>(counts[0]));
    }

    GlmFit fit;
    double prev_ll = -std::numeric_limits<double>::infinity();
    bool have_prev = false;
    int iter = 0;
    Derivatives d = derivatives_at(Z, onehot, y, B, offsets);

    for (;; ++iter) {
        const double grad_max = d.gradient.size() ? d.gradient.cwiseAbs().maxCoeff() : 0.0;
        const double rel_change =
            have_prev ? std::abs(d.log_likelihood - prev_ll) /
                            std::max(1.0, std::abs(d.log_likelihood))
                      : std::numeric_limits<double>::infinity();
        if (grad_max <= opts.gradient_tol && (!have_prev || rel_change <= opts.loglik_rel_tol)) {
            fit.converged = true;
            break;
        }
        if (iter >= opts.max_iterations)
            throw FitError("fit did not converge after " + std::to_string(opts.max_iterations) +
                           " iterations (gradient max-norm = " + fmt(grad_max) + ")");

        if (d.max_event_probability > 1.0 - 1e-10)
            throw FitError("separation detected: a fitted probability for an observed event "
                           "reached 1 within 1e-10");

        Eigen::LDLT<Eigen::MatrixXd> ldlt(d.information);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
            ldlt.vectorD().minCoeff() <= ldlt.vectorD().maxCoeff() * 1e-14)
            throw FitError("rank-deficient design: observed information is singular "
                           "(exactly collinear predictors?)");
        const Eigen::VectorXd step = ldlt.solve(d.gradient);
        if (!step.allFinite()) throw FitError("Newton step is not finite");

        // step-halving: accept only likelihood-increasing steps
        prev_ll = d.log_likelihood;
        have_prev = true;
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h < 40; ++h, t *= 0.5) {
            Eigen::MatrixXd candidate = B;
            for (Eigen::Index j = 0; j < k1; ++j)
                for (Eigen::Index a = 0; a < m; ++a) candidate(j, a) += t * step[j * m + a];
            const Eigen::MatrixXd lp_try = linear_predictors_of(Z, candidate, offsets);
            const double ll_try = loglik_of(softmax_of(lp_try), y);
            if (ll_try > prev_ll) {
                B = candidate;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (d.gradient.cwiseAbs().maxCoeff() <= opts.gradient_tol * 10) {
                fit.converged = true;
                break;
            }
            throw FitError("fit stalled: no likelihood-increasing step found "
                           "(gradient max-norm = " + fmt(d.gradient.cwiseAbs().maxCoeff()) + ")");
        }

        if (B.cwiseAbs().maxCoeff() > opts.coefficient_bound)
            throw FitError("separation detected: coefficient magnitude exceeded " +
                           fmt(opts.coefficient_bound) + " while the likelihood keeps improving");

        d = derivatives_at(Z, onehot, y, B, offsets);
    }

    fit.iterations = iter;
    fit.log_likelihood = d.log_likelihood;

    // map back to the original predictor scale
    fit.coefficients.resize(k1, m);
    for (Eigen::Index j = 0; j < k1; ++j) {
        double intercept = B(j, 0);
        for (Eigen::Index a = 0; a < q; ++a) {
            const double beta = B(j, a + 1) / scale[a];
            fit.coefficients(j, a + 1) = beta;
            intercept -= beta * center[a];
        }
        fit.coefficients(j, 0) = intercept;
    }

    // observed information on the original scale, at the optimum
    const Eigen::MatrixXd Z_orig = design_with_intercept(X, n);
    const Derivatives d_orig = derivatives_at(Z_orig, onehot, y, fit.coefficients, offsets);
    fit.observed_information = d_orig.information;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(fit.observed_information);
    fit.standard_errors.resize(k1, m);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const Eigen::MatrixXd cov = ldlt.solve(
            Eigen::MatrixXd::Identity(fit.observed_information.rows(),
                                      fit.observed_information.cols()));
        for (Eigen::Index j = 0; j < k1; ++j)
            for (Eigen::Index a = 0; a < m; ++a)
                fit.standard_errors(j, a) = std::sqrt(std::max(0.0, cov(j * m + a, j * m + a)));
    } else {
        fit.standard_errors.setConstant(std::numeric_limits<double>::quiet_NaN());
    }
    return fit;
}

namespace {

Eigen::MatrixXd dataset_design(const Dataset& d) {
    const Eigen::Index n = static_cast<Eigen::Index>(d.n_rows());
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(d.n_predictors()));
    for (std::size_t j = 0; j < d.n_predictors(); ++j)
        X.col(static_cast<Eigen::Index>(j)) =
            Eigen::Map<const Eigen::VectorXd>(d.columns[j].data(), n);
    return X;
}

} // namespace

FitResult fit(const Dataset& d, const GlmOptions& opts) {
    const std::size_t k = d.n_categories();
    const std::size_t p = d.n_predictors();
    const std::size_t params = (k - 1) * (p + 1);
    if (d.n_rows() <= params)
        throw PreconditionError("fit needs n > (k-1)(p+1) = " + std::to_string(params) +
                                " subjects; dataset has " + std::to_string(d.n_rows()));

    const GlmFit g = fit_multinomial_glm(dataset_design(d), d.outcome,
                                         static_cast<int>(k), {}, opts);

    FitResult result;
    result.model.categories = d.categories;
    result.model.predictor_names = d.predictor_names;
    result.model.coefficients = g.coefficients;
    result.log_likelihood = g.log_likelihood;
    result.aic = -2.0 * g.log_likelihood + 2.0 * static_cast<double>(params);
    result.iterations = g.iterations;
    result.converged = g.converged;
    result.observed_information = g.observed_information;
    result.standard_errors = g.standard_errors;
    return result;
}

LoglikDerivatives log_likelihood_gradient_hessian(const MultinomialModel& m,
                                                  const Dataset& d) {
    m.validate();
    if (m.n_predictors() != d.n_predictors())
        throw DataError("log_likelihood_gradient_hessian: dataset has " +
                        std::to_string(d.n_predictors()) + " predictors, model expects " +
                        std::to_string(m.n_predictors()));
    const std::vector<int> y = outcomes_in_model_order(m, d);
    const Eigen::Index n = static_cast<Eigen::Index>(d.n_rows());
    const Eigen::Index k1 = m.coefficients.rows();

    // columns reordered to the model's predictor names
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(m.n_predictors()));
    for (std::size_t j = 0; j < m.n_predictors(); ++j) {
        const auto it = std::find(d.predictor_names.begin(), d.predictor_names.end(),
                                  m.predictor_names[j]);
        if (it == d.predictor_names.end())
            throw DataError("dataset is missing model predictor column '" +
                            m.predictor_names[j] + "'");
        X.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(
            d.columns[static_cast<std::size_t>(it - d.predictor_names.begin())].data(), n);
    }

    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, k1);
    for (Eigen::Index i = 0; i < n; ++i)
        if (y[static_cast<std::size_t>(i)] > 0) onehot(i, y[static_cast<std::size_t>(i)] - 1) = 1.0;

    const Derivatives der =
        derivatives_at(design_with_intercept(X, n), onehot, y, m.coefficients, {});
    return {der.log_likelihood, der.gradient, -der.information};
}

TransformSearchResult transform_search(const Dataset& d, const std::string& predictor,
                                       const GlmOptions& opts) {
    const auto it = std::find(d.predictor_names.begin(), d.predictor_names.end(), predictor);
    if (it == d.predictor_names.end())
        throw DataError("transform_search: no predictor named '" + predictor + "'");
    const auto& col = d.columns[static_cast<std::size_t>(it - d.predictor_names.begin())];
    const Eigen::Index n = static_cast<Eigen::Index>(col.size());
    const Eigen::Map<const Eigen::VectorXd> x(col.data(), n);
    const bool strictly_positive = (x.array() > 0.0).all();

    struct Spec {
        std::string label;
        int extra; // 0 none, 1 log, 2 square, 3 cube
    };
    const Spec specs[] = {{"x", 0}, {"x + log(x)", 1}, {"x + x^2", 2}, {"x + x^3", 3}};

    TransformSearchResult result;
    result.predictor = predictor;
    const int k = static_cast<int>(d.n_categories());

    for (const auto& spec : specs) {
        TransformCandidate cand;
        cand.label = spec.label;
        if (spec.extra == 1 && !strictly_positive) {
            cand.skipped = true;
            cand.note = "skipped: predictor has nonpositive values, ln(x) undefined";
            result.candidates.push_back(cand);
            continue;
        }
        Eigen::MatrixXd X(n, spec.extra == 0 ? 1 : 2);
        X.col(0) = x;
        if (spec.extra == 1) X.col(1) = x.array().log();
        if (spec.extra == 2) X.col(1) = x.array().square();
        if (spec.extra == 3) X.col(1) = x.array().cube();
        try {
            const GlmFit g = fit_multinomial_glm(X, d.outcome, k, {}, opts);
            cand.available = true;
            cand.aic = -2.0 * g.log_likelihood +
                       2.0 * static_cast<double>((k - 1) * (X.cols() + 1));
        } catch (const std::exception& e) {
            cand.note = std::string("fit failed: ") + e.what();
        }
        result.candidates.push_back(cand);
    }

    bool have = false;
    double best = 0.0;
    for (std::size_t i = 0; i < result.candidates.size(); ++i) {
        const auto& cand = result.candidates[i];
        if (!cand.available) continue;
        if (!have || cand.aic < best) {
            have = true;
            best = cand.aic;
            result.selected_index = i;
        }
    }
    if (!have) throw FitError("transform_search: every candidate fit failed");
    return result;
}

} // namespace mpm
