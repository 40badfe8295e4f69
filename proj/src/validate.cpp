#include "mpm/validate.hpp"

#include "mpm/errors.hpp"
#include "mpm/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace mpm {

namespace {

std::vector<std::pair<std::size_t, std::size_t>> category_pairs(std::size_t k) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b) pairs.emplace_back(a, b);
    return pairs;
}

ValidationMetrics evaluate_metrics(const Eigen::MatrixXd& lps, const std::vector<int>& y,
                                   const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    const Eigen::MatrixXd probs = probability_matrix_from_lps(lps);
    ValidationMetrics metrics;
    metrics.pdi = pdi(probs, y);
    for (const auto& [a, b] : pairs)
        metrics.pairwise_c.push_back(
            pairwise_c(probs, y, a, b, PairwiseMethod::conditional_risk));
    const WeakCalibration weak = weak_calibration(lps, y);
    for (Eigen::Index j = 0; j < weak.slope_matrix.rows(); ++j)
        metrics.c_slopes.push_back(weak.slope_matrix(j, j));
    return metrics;
}

Dataset subset_dataset(const Dataset& d, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.predictor_names = d.predictor_names;
    out.categories = d.categories;
    out.outcome_name = d.outcome_name;
    out.columns.assign(d.columns.size(), {});
    for (std::size_t j = 0; j < d.columns.size(); ++j) {
        out.columns[j].reserve(idx.size());
        for (std::size_t i : idx) out.columns[j].push_back(d.columns[j][i]);
    }
    out.outcome.reserve(idx.size());
    for (std::size_t i : idx) out.outcome.push_back(d.outcome[i]);
    return out;
}

} // namespace

InternalValidationResult internal_validate_with_resampler(const Dataset& d, int B,
                                                           std::uint64_t seed,
                                                           const Resampler& resampler,
                                                           const GlmOptions& fit_opts) {
    if (B < 2) throw DataError("internal_validate: B must be at least 2");
    const std::size_t n = d.n_rows();
    const std::size_t k = d.n_categories();
    const auto pairs = category_pairs(k);

    InternalValidationResult result;
    result.B = B;
    result.seed = seed;
    result.pairs = pairs;
    result.categories = d.categories;

    const FitResult base = fit(d, fit_opts);
    const Eigen::MatrixXd lps_full = linear_predictor_matrix(base.model, d);
    result.apparent = evaluate_metrics(lps_full, d.outcome, pairs);

    struct ReplicateOutcome {
        bool ok = false;
        ValidationMetrics optimism;
    };
    std::vector<ReplicateOutcome> replicates(static_cast<std::size_t>(B));

    parallel_for_index(static_cast<std::size_t>(B), [&](std::size_t r) {
        const std::vector<std::size_t> idx = resampler(seed + r, n);
        try {
            const Dataset boot = subset_dataset(d, idx);
            const FitResult fit_b = fit(boot, fit_opts);
            const ValidationMetrics apparent_b = evaluate_metrics(
                linear_predictor_matrix(fit_b.model, boot), boot.outcome, pairs);
            const ValidationMetrics test_b = evaluate_metrics(
                linear_predictor_matrix(fit_b.model, d), d.outcome, pairs);
            ValidationMetrics opt;
            opt.pdi = apparent_b.pdi - test_b.pdi;
            for (std::size_t i = 0; i < pairs.size(); ++i)
                opt.pairwise_c.push_back(apparent_b.pairwise_c[i] - test_b.pairwise_c[i]);
            for (std::size_t j = 0; j + 1 < k; ++j)
                opt.c_slopes.push_back(apparent_b.c_slopes[j] - test_b.c_slopes[j]);
            replicates[r] = {true, std::move(opt)};
        } catch (const FitError&) {
            replicates[r].ok = false;
        } catch (const PreconditionError&) {
            replicates[r].ok = false;
        }
    });

    ValidationMetrics sum;
    sum.pairwise_c.assign(pairs.size(), 0.0);
    sum.c_slopes.assign(k - 1, 0.0);
    int used = 0;
    for (const auto& rep : replicates) {
        if (!rep.ok) continue;
        ++used;
        sum.pdi += rep.optimism.pdi;
        for (std::size_t i = 0; i < pairs.size(); ++i)
            sum.pairwise_c[i] += rep.optimism.pairwise_c[i];
        for (std::size_t j = 0; j + 1 < k; ++j) sum.c_slopes[j] += rep.optimism.c_slopes[j];
    }
    result.used_replicates = used;
    result.failed_replicates = B - used;
    if (result.failed_replicates * 5 > B)
        throw FitError("internal_validate: " + std::to_string(result.failed_replicates) +
                       " of " + std::to_string(B) +
                       " bootstrap replicates failed to fit (> 20%); the dataset is too "
                       "small or unstable for bootstrap validation");

    result.mean_optimism.pdi = sum.pdi / used;
    result.mean_optimism.pairwise_c.resize(pairs.size());
    result.mean_optimism.c_slopes.resize(k - 1);
    result.adjusted.pdi = result.apparent.pdi - result.mean_optimism.pdi;
    result.adjusted.pairwise_c.resize(pairs.size());
    result.adjusted.c_slopes.resize(k - 1);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        result.mean_optimism.pairwise_c[i] = sum.pairwise_c[i] / used;
        result.adjusted.pairwise_c[i] =
            result.apparent.pairwise_c[i] - result.mean_optimism.pairwise_c[i];
    }
    for (std::size_t j = 0; j + 1 < k; ++j) {
        result.mean_optimism.c_slopes[j] = sum.c_slopes[j] / used;
        result.adjusted.c_slopes[j] =
            result.apparent.c_slopes[j] - result.mean_optimism.c_slopes[j];
    }
    return result;
}

InternalValidationResult internal_validate(const Dataset& d, int B, std::uint64_t seed,
                                           const GlmOptions& fit_opts) {
    return internal_validate_with_resampler(
        d, B, seed,
        [](std::uint64_t replicate_seed, std::size_t n) {
            Rng rng(replicate_seed);
            std::vector<std::size_t> idx(n);
            for (std::size_t i = 0; i < n; ++i)
                idx[i] = static_cast<std::size_t>(rng.next_below(n));
            return idx;
        },
        fit_opts);
}

ExternalValidationReport external_validate(const MultinomialModel& m, const Dataset& d_val,
                                           const CaseMixSummary* dev_summary,
                                           const EvaluationOptions& opts) {
    m.validate();
    ExternalValidationReport report;
    report.calibration = calibration_report(m, d_val, opts);
    report.discrimination = discrimination_report(m, d_val, opts);
    report.validation_casemix = describe(d_val);
    if (dev_summary) {
        // align the validation summary with the development summary's order
        CaseMixSummary aligned;
        aligned.n = report.validation_casemix.n;
        for (const auto& dp : dev_summary->predictors) {
            const auto it = std::find_if(report.validation_casemix.predictors.begin(),
                                         report.validation_casemix.predictors.end(),
                                         [&](const PredictorSummary& vp) {
                                             return vp.name == dp.name;
                                         });
            if (it == report.validation_casemix.predictors.end())
                throw DataError("case-mix comparison: validation data lacks predictor '" +
                                dp.name + "'");
            aligned.predictors.push_back(*it);
        }
        for (const auto& dc : dev_summary->categories) {
            const auto it = std::find_if(report.validation_casemix.categories.begin(),
                                         report.validation_casemix.categories.end(),
                                         [&](const CategorySummary& vc) {
                                             return vc.label == dc.label;
                                         });
            if (it == report.validation_casemix.categories.end())
                throw DataError("case-mix comparison: validation data lacks category '" +
                                dc.label + "'");
            aligned.categories.push_back(*it);
        }
        if (aligned.predictors.size() != report.validation_casemix.predictors.size() ||
            aligned.categories.size() != report.validation_casemix.categories.size())
            throw DataError("case-mix comparison: predictor or category sets differ");
        report.casemix_comparison = compare_casemix(*dev_summary, aligned);
    }
    return report;
}

Eigen::MatrixXd compose_recalibration(const Eigen::MatrixXd& beta,
                                      const Eigen::MatrixXd& alpha) {
    const Eigen::Index k1 = beta.rows();
    const Eigen::Index m = beta.cols();
    if (alpha.rows() != k1 || alpha.cols() != k1 + 1)
        throw DataError("compose_recalibration: alpha must be (k-1) x k");
    Eigen::MatrixXd gamma(k1, m);
    for (Eigen::Index j = 0; j < k1; ++j) {
        for (Eigen::Index i = 0; i < m; ++i) {
            double acc = i == 0 ? alpha(j, 0) : 0.0;
            for (Eigen::Index l = 0; l < k1; ++l) acc += alpha(j, l + 1) * beta(l, i);
            gamma(j, i) = acc;
        }
    }
    return gamma;
}

UpdateResult recalibrate(const MultinomialModel& m, const Dataset& d_new,
                         const EvaluationOptions& opts, const GlmOptions& fit_opts) {
    m.validate();
    const std::vector<int> y = outcomes_in_model_order(m, d_new);
    const Eigen::MatrixXd lps = linear_predictor_matrix(m, d_new);
    const int k = static_cast<int>(m.n_categories());

    for (Eigen::Index j = 0; j < lps.cols(); ++j) {
        const double spread = (lps.col(j).array() - lps(0, j)).abs().maxCoeff();
        if (spread < 1e-12)
            throw FitError("recalibrate: linear predictor " + std::to_string(j) +
                           " has zero variance in the update data");
    }

    const GlmFit alpha_fit = fit_multinomial_glm(lps, y, k, {}, fit_opts);

    UpdateResult result;
    result.strategy = UpdateStrategy::recalibration;
    result.alpha = alpha_fit.coefficients;
    result.updated = m;
    result.updated.coefficients = compose_recalibration(m.coefficients, alpha_fit.coefficients);
    result.pre = external_validate(m, d_new, nullptr, opts);
    result.post = external_validate(result.updated, d_new, nullptr, opts);
    return result;
}

UpdateResult refit(const MultinomialModel& m, const Dataset& d_new,
                   const EvaluationOptions& opts, const GlmOptions& fit_opts) {
    m.validate();
    const std::vector<int> y = outcomes_in_model_order(m, d_new);
    const Eigen::Index n = static_cast<Eigen::Index>(d_new.n_rows());

    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(m.n_predictors()));
    for (std::size_t j = 0; j < m.n_predictors(); ++j) {
        const auto it = std::find(d_new.predictor_names.begin(), d_new.predictor_names.end(),
                                  m.predictor_names[j]);
        if (it == d_new.predictor_names.end())
            throw DataError("refit: update data is missing model predictor column '" +
                            m.predictor_names[j] + "'");
        X.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(
            d_new.columns[static_cast<std::size_t>(it - d_new.predictor_names.begin())].data(),
            n);
    }
    const std::size_t params = (m.n_categories() - 1) * (m.n_predictors() + 1);
    if (d_new.n_rows() <= params)
        throw PreconditionError("refit needs n > (k-1)(p+1) = " + std::to_string(params) +
                                " subjects; update data has " + std::to_string(d_new.n_rows()));

    const GlmFit g = fit_multinomial_glm(X, y, static_cast<int>(m.n_categories()), {}, fit_opts);

    UpdateResult result;
    result.strategy = UpdateStrategy::refit;
    result.updated = m; // categories and predictor order preserved
    result.updated.coefficients = g.coefficients;
    result.pre = external_validate(m, d_new, nullptr, opts);
    result.post = external_validate(result.updated, d_new, nullptr, opts);
    return result;
}

} // namespace mpm
