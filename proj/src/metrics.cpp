#include "mpm/metrics.hpp"

#include "mpm/errors.hpp"
#include "mpm/fit.hpp"
#include "mpm/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mpm {

namespace {

std::vector<std::size_t> category_counts_of(const std::vector<int>& outcomes, int k) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int c : outcomes) {
        if (c < 0 || c >= k) throw DataError("outcome index out of range");
        counts[static_cast<std::size_t>(c)]++;
    }
    return counts;
}

void require_all_observed(const std::vector<std::size_t>& counts) {
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] == 0)
            throw DataError("category " + std::to_string(c) + " is not observed");
}

} // namespace

std::vector<OERatio> mean_calibration(const Eigen::MatrixXd& probs,
                                      const std::vector<int>& outcomes,
                                      const std::vector<std::string>& categories) {
    const std::size_t n = outcomes.size();
    if (n == 0) throw DataError("mean_calibration: no subjects");
    if (probs.rows() != static_cast<Eigen::Index>(n))
        throw DataError("mean_calibration: prediction rows do not align with outcomes");
    const int k = static_cast<int>(probs.cols());
    const auto counts = category_counts_of(outcomes, k);

    std::vector<OERatio> out;
    for (int c = 0; c < k; ++c) {
        OERatio oe;
        oe.category = c < static_cast<int>(categories.size()) ? categories[static_cast<std::size_t>(c)]
                                                              : std::to_string(c);
        oe.observed = static_cast<double>(counts[static_cast<std::size_t>(c)]);
        oe.expected = probs.col(c).sum();
        if (oe.expected <= 0.0)
            throw DataError("mean_calibration: zero expected count for category " + oe.category);
        oe.ratio = oe.observed / oe.expected;
        oe.mean_predicted = oe.expected / static_cast<double>(n);
        oe.prevalence = oe.observed / static_cast<double>(n);
        if (oe.observed > 0.0) {
            const double se = std::sqrt((1.0 - oe.prevalence) / oe.observed);
            oe.ci.low = std::exp(std::log(oe.ratio) - normal_z975() * se);
            oe.ci.high = std::exp(std::log(oe.ratio) + normal_z975() * se);
        }
        out.push_back(oe);
    }
    return out;
}

WeakCalibration weak_calibration(const Eigen::MatrixXd& lps,
                                 const std::vector<int>& outcomes) {
    const Eigen::Index n = static_cast<Eigen::Index>(outcomes.size());
    const Eigen::Index k1 = lps.cols();
    const int k = static_cast<int>(k1) + 1;
    if (lps.rows() != n) throw DataError("weak_calibration: LP rows do not align with outcomes");
    require_all_observed(category_counts_of(outcomes, k));
    for (Eigen::Index j = 0; j < k1; ++j) {
        const double sd = std::sqrt((lps.col(j).array() - lps.col(j).mean()).square().sum() /
                                    std::max<double>(1.0, static_cast<double>(n - 1)));
        if (sd < 1e-12)
            throw FitError("weak_calibration: linear predictor " + std::to_string(j) +
                           " has zero variance");
    }

    WeakCalibration out;

    const GlmFit slope_fit = fit_multinomial_glm(lps, outcomes, k);
    out.slope_matrix.resize(k1, k1);
    out.slope_ci.assign(static_cast<std::size_t>(k1),
                        std::vector<Interval>(static_cast<std::size_t>(k1)));
    for (Eigen::Index j = 0; j < k1; ++j) {
        for (Eigen::Index m = 0; m < k1; ++m) {
            const double est = slope_fit.coefficients(j, m + 1);
            const double se = slope_fit.standard_errors(j, m + 1);
            out.slope_matrix(j, m) = est;
            out.slope_ci[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)] = {
                est - normal_z975() * se, est + normal_z975() * se};
        }
    }

    const GlmFit intercept_fit =
        fit_multinomial_glm(Eigen::MatrixXd(n, 0), outcomes, k, lps);
    out.intercepts.resize(k1);
    out.intercept_ci.resize(static_cast<std::size_t>(k1));
    for (Eigen::Index j = 0; j < k1; ++j) {
        const double est = intercept_fit.coefficients(j, 0);
        const double se = intercept_fit.standard_errors(j, 0);
        out.intercepts[j] = est;
        out.intercept_ci[static_cast<std::size_t>(j)] = {est - normal_z975() * se,
                                                         est + normal_z975() * se};
    }
    return out;
}

BinaryWeakCalibration weak_calibration_binary_approx(const Eigen::MatrixXd& probs,
                                                     const std::vector<int>& outcomes,
                                                     std::size_t category,
                                                     const std::string& label) {
    const Eigen::Index n = static_cast<Eigen::Index>(outcomes.size());
    if (probs.rows() != n)
        throw DataError("binary weak calibration: prediction rows do not align with outcomes");
    if (category >= static_cast<std::size_t>(probs.cols()))
        throw DataError("binary weak calibration: category index out of range");

    std::vector<int> y(outcomes.size());
    std::size_t events = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        y[i] = outcomes[i] == static_cast<int>(category) ? 1 : 0;
        events += static_cast<std::size_t>(y[i]);
    }
    if (events == 0 || events == outcomes.size())
        throw DataError("binary weak calibration: outcome indicator is constant (all " +
                        std::string(events == 0 ? "0" : "1") + ")");

    Eigen::MatrixXd s(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = probs(i, static_cast<Eigen::Index>(category));
        if (!(p > 0.0 && p < 1.0))
            throw DataError("binary weak calibration: predicted risk must lie strictly in "
                            "(0,1); subject " + std::to_string(i) + " has " +
                            format_double(p));
        s(i, 0) = std::log(p / (1.0 - p));
    }

    BinaryWeakCalibration out;
    out.category = label.empty() ? std::to_string(category) : label;

    const GlmFit slope_fit = fit_multinomial_glm(s, y, 2);
    out.slope = slope_fit.coefficients(0, 1);
    const double se_slope = slope_fit.standard_errors(0, 1);
    out.slope_ci = {out.slope - normal_z975() * se_slope, out.slope + normal_z975() * se_slope};

    const GlmFit intercept_fit = fit_multinomial_glm(Eigen::MatrixXd(n, 0), y, 2, s);
    out.intercept = intercept_fit.coefficients(0, 0);
    const double se_int = intercept_fit.standard_errors(0, 0);
    out.intercept_ci = {out.intercept - normal_z975() * se_int,
                        out.intercept + normal_z975() * se_int};
    return out;
}

ModerateCurves moderate_calibration_curve(const Eigen::MatrixXd& lps,
                                          const std::vector<int>& outcomes,
                                          const ModerateCurveOptions& opts) {
    const Eigen::Index n = static_cast<Eigen::Index>(outcomes.size());
    const Eigen::Index k1 = lps.cols();
    const int k = static_cast<int>(k1) + 1;
    if (lps.rows() != n)
        throw DataError("moderate calibration: LP rows do not align with outcomes");
    if (static_cast<std::size_t>(n) < opts.min_subjects)
        throw PreconditionError(
            "moderate calibration needs at least " + std::to_string(opts.min_subjects) +
            " subjects for spline smoothing (got " + std::to_string(n) +
            "); gather more data or evaluate mean/weak calibration only");
    require_all_observed(category_counts_of(outcomes, k));

    const Eigen::MatrixXd model_probs = probability_matrix_from_lps(lps);

    ModerateCurves out;
    out.per_category.assign(static_cast<std::size_t>(k), {});

    // constant LPs carry no ordering: the curve collapses to one point per
    // category at (mean predicted risk, observed prevalence)
    bool all_constant = true;
    for (Eigen::Index j = 0; j < k1 && all_constant; ++j) {
        if ((lps.col(j).array() - lps(0, j)).abs().maxCoeff() > 0.0) all_constant = false;
    }
    const auto counts = category_counts_of(outcomes, k);
    if (all_constant) {
        out.degenerate = true;
        for (int c = 0; c < k; ++c) {
            out.per_category[static_cast<std::size_t>(c)].push_back(
                {model_probs.col(c).mean(),
                 static_cast<double>(counts[static_cast<std::size_t>(c)]) /
                     static_cast<double>(n)});
        }
        return out;
    }

    Eigen::MatrixXd smooth_probs;
    bool done = false;
    try {
        // spline basis per LP, knots at the configured LP quantiles
        std::vector<NaturalSplineBasis> bases;
        std::size_t total_cols = 0;
        for (Eigen::Index j = 0; j < k1; ++j) {
            std::vector<double> col(lps.col(j).data(), lps.col(j).data() + n);
            std::vector<double> knots;
            knots.reserve(opts.knot_quantiles.size());
            for (double q : opts.knot_quantiles) knots.push_back(quantile_type7(col, q));
            bases.emplace_back(std::move(knots)); // throws if < 3 distinct knots
            total_cols += bases.back().n_columns();
        }
        Eigen::MatrixXd X(n, static_cast<Eigen::Index>(total_cols));
        std::vector<double> buf;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index col0 = 0;
            for (Eigen::Index j = 0; j < k1; ++j) {
                const auto& basis = bases[static_cast<std::size_t>(j)];
                buf.resize(basis.n_columns());
                basis.evaluate(lps(i, j), buf.data());
                for (std::size_t b = 0; b < basis.n_columns(); ++b)
                    X(i, col0 + static_cast<Eigen::Index>(b)) = buf[b];
                col0 += static_cast<Eigen::Index>(basis.n_columns());
            }
        }
        const GlmFit smooth_fit = fit_multinomial_glm(X, outcomes, k);
        Eigen::MatrixXd recal_lps(n, k1);
        recal_lps.noalias() =
            X * smooth_fit.coefficients.rightCols(X.cols()).transpose();
        for (Eigen::Index j = 0; j < k1; ++j)
            recal_lps.col(j).array() += smooth_fit.coefficients(j, 0);
        smooth_probs = probability_matrix_from_lps(recal_lps);
        done = true;
    } catch (const std::exception&) {
        // fall back to the linear (weak-framework) recalibration below
    }

    if (!done) {
        out.linear_fallback = true;
        const GlmFit linear_fit = fit_multinomial_glm(lps, outcomes, k);
        Eigen::MatrixXd recal_lps(n, k1);
        recal_lps.noalias() = lps * linear_fit.coefficients.rightCols(k1).transpose();
        for (Eigen::Index j = 0; j < k1; ++j)
            recal_lps.col(j).array() += linear_fit.coefficients(j, 0);
        smooth_probs = probability_matrix_from_lps(recal_lps);
    }

    for (int c = 0; c < k; ++c) {
        auto& pts = out.per_category[static_cast<std::size_t>(c)];
        pts.reserve(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i)
            pts.push_back({model_probs(i, c), smooth_probs(i, c)});
        std::sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) {
            return a.predicted < b.predicted ||
                   (a.predicted == b.predicted && a.observed_smoothed < b.observed_smoothed);
        });
    }
    return out;
}

namespace {

struct CategoryValues {
    std::vector<std::vector<double>> sorted; // per category, p_j values sorted
};

// sort/rank decomposition with tie handling: for subject value v the share of
// tuples it wins is a polynomial in the per-category fractions below/at v;
// the coefficient of t^s collects s-way ties and contributes 1/(s+1).
double pdi_rank_category(const Eigen::MatrixXd& probs, const std::vector<int>& outcomes,
                         int k, int j, const std::vector<std::vector<std::size_t>>& members) {
    std::vector<std::vector<double>> sorted(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        auto& v = sorted[static_cast<std::size_t>(c)];
        v.reserve(members[static_cast<std::size_t>(c)].size());
        for (std::size_t i : members[static_cast<std::size_t>(c)])
            v.push_back(probs(static_cast<Eigen::Index>(i), j));
        std::sort(v.begin(), v.end());
    }

    double total = 0.0;
    std::vector<double> coef;
    for (std::size_t i : members[static_cast<std::size_t>(j)]) {
        const double v = probs(static_cast<Eigen::Index>(i), j);
        coef.assign(1, 1.0);
        for (int c = 0; c < k; ++c) {
            if (c == j) continue;
            const auto& vals = sorted[static_cast<std::size_t>(c)];
            const double denom = static_cast<double>(vals.size());
            const auto lo = std::lower_bound(vals.begin(), vals.end(), v);
            const auto hi = std::upper_bound(vals.begin(), vals.end(), v);
            const double below = static_cast<double>(lo - vals.begin()) / denom;
            const double tied = static_cast<double>(hi - lo) / denom;
            coef.push_back(0.0);
            for (std::size_t s = coef.size() - 1; s > 0; --s)
                coef[s] = coef[s] * below + coef[s - 1] * tied;
            coef[0] *= below;
        }
        for (std::size_t s = 0; s < coef.size(); ++s)
            total += coef[s] / static_cast<double>(s + 1);
    }
    return total / static_cast<double>(members[static_cast<std::size_t>(j)].size());
}

std::vector<std::vector<std::size_t>> members_by_category(const std::vector<int>& outcomes,
                                                          int k) {
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        members[static_cast<std::size_t>(outcomes[i])].push_back(i);
    return members;
}

} // namespace

double pdi_rank(const Eigen::MatrixXd& probs, const std::vector<int>& outcomes) {
    const int k = static_cast<int>(probs.cols());
    const auto counts = category_counts_of(outcomes, k);
    require_all_observed(counts);
    const auto members = members_by_category(outcomes, k);
    double total = 0.0;
    for (int j = 0; j < k; ++j) total += pdi_rank_category(probs, outcomes, k, j, members);
    return total / static_cast<double>(k);
}

double pdi_enumerated(const Eigen::MatrixXd& probs, const std::vector<int>& outcomes) {
    const int k = static_cast<int>(probs.cols());
    const auto counts = category_counts_of(outcomes, k);
    require_all_observed(counts);
    const auto members = members_by_category(outcomes, k);

    double tuples = 1.0;
    for (int c = 0; c < k; ++c) tuples *= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    if (tuples > 2e7)
        throw PreconditionError("pdi_enumerated: too many tuples (" + format_double(tuples) +
                                "); use the rank path");

    std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
    double total = 0.0;
    for (;;) {
        for (int j = 0; j < k; ++j) {
            const double own = probs(
                static_cast<Eigen::Index>(members[static_cast<std::size_t>(j)]
                                              [idx[static_cast<std::size_t>(j)]]), j);
            double maxv = own;
            for (int c = 0; c < k; ++c) {
                const double v = probs(
                    static_cast<Eigen::Index>(members[static_cast<std::size_t>(c)]
                                                  [idx[static_cast<std::size_t>(c)]]), j);
                if (v > maxv) maxv = v;
            }
            if (own == maxv) {
                int at_max = 0;
                for (int c = 0; c < k; ++c) {
                    const double v = probs(
                        static_cast<Eigen::Index>(members[static_cast<std::size_t>(c)]
                                                      [idx[static_cast<std::size_t>(c)]]), j);
                    if (v == maxv) ++at_max;
                }
                total += 1.0 / static_cast<double>(at_max);
            }
        }
        // odometer
        int c = 0;
        for (; c < k; ++c) {
            if (++idx[static_cast<std::size_t>(c)] < counts[static_cast<std::size_t>(c)]) break;
            idx[static_cast<std::size_t>(c)] = 0;
        }
        if (c == k) break;
    }
    return total / (tuples * static_cast<double>(k));
}

double pdi(const Eigen::MatrixXd& probs, const std::vector<int>& outcomes) {
    const int k = static_cast<int>(probs.cols());
    const auto counts = category_counts_of(outcomes, k);
    require_all_observed(counts);
    double tuples = 1.0;
    for (auto c : counts) tuples *= static_cast<double>(c);
    if (tuples <= 4096.0) return pdi_enumerated(probs, outcomes);
    return pdi_rank(probs, outcomes);
}

double pairwise_c(const Eigen::MatrixXd& probs, const std::vector<int>& outcomes,
                  std::size_t cat_a, std::size_t cat_b, PairwiseMethod method) {
    const int k = static_cast<int>(probs.cols());
    if (cat_a >= static_cast<std::size_t>(k) || cat_b >= static_cast<std::size_t>(k) ||
        cat_a == cat_b)
        throw DataError("pairwise_c: invalid category pair");
    if (method == PairwiseMethod::submodel && cat_a != 0 && cat_b != 0)
        throw DataError("pairwise_c: the submodel method is only defined for pairs "
                        "involving the reference category");
    if (method == PairwiseMethod::submodel && cat_a != 0) std::swap(cat_a, cat_b);

    struct Scored {
        double score;
        bool is_b;
    };
    std::vector<Scored> scored;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto c = static_cast<std::size_t>(outcomes[i]);
        if (c != cat_a && c != cat_b) continue;
        const double pa = probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cat_a));
        const double pb = probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cat_b));
        double score;
        if (method == PairwiseMethod::submodel)
            score = std::log(pb) - std::log(pa); // the submodel linear predictor
        else
            score = pb / (pa + pb);
        scored.push_back({score, c == cat_b});
    }
    std::size_t n_b = 0;
    for (const auto& s : scored) n_b += s.is_b ? 1u : 0u;
    const std::size_t n_a = scored.size() - n_b;
    if (n_a == 0 || n_b == 0)
        throw DataError("pairwise_c: one side of the category pair is empty");

    std::sort(scored.begin(), scored.end(),
              [](const Scored& x, const Scored& y) { return x.score < y.score; });

    // average ranks over tied scores; c from the rank-sum of the "b" group
    double rank_sum_b = 0.0;
    std::size_t i = 0;
    while (i < scored.size()) {
        std::size_t j = i;
        while (j < scored.size() && scored[j].score == scored[i].score) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // ranks are 1-based
        for (std::size_t t = i; t < j; ++t)
            if (scored[t].is_b) rank_sum_b += avg_rank;
        i = j;
    }
    const double u = rank_sum_b - static_cast<double>(n_b) * (static_cast<double>(n_b) + 1.0) / 2.0;
    return u / (static_cast<double>(n_a) * static_cast<double>(n_b));
}

std::vector<std::vector<std::size_t>> bootstrap_resamples(const std::vector<int>& outcomes,
                                                          int n_categories, int B,
                                                          std::uint64_t seed,
                                                          int* total_redraws) {
    if (B < 2) throw DataError("bootstrap needs B >= 2");
    const std::size_t n = outcomes.size();
    if (n == 0) throw DataError("bootstrap: no subjects");
    std::vector<std::vector<std::size_t>> samples(static_cast<std::size_t>(B));
    std::vector<int> redraws(static_cast<std::size_t>(B), 0);

    parallel_for_index(static_cast<std::size_t>(B), [&](std::size_t r) {
        Rng rng(seed + r);
        auto& idx = samples[r];
        for (int attempt = 0; attempt < 100; ++attempt) {
            idx.clear();
            idx.reserve(n);
            std::vector<bool> seen(static_cast<std::size_t>(n_categories), false);
            for (std::size_t i = 0; i < n; ++i) {
                const auto draw = static_cast<std::size_t>(rng.next_below(n));
                idx.push_back(draw);
                seen[static_cast<std::size_t>(outcomes[draw])] = true;
            }
            if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) return;
            redraws[r]++;
        }
        throw FitError("bootstrap: replicate " + std::to_string(r) +
                       " failed to contain every category after 100 redraws");
    });

    if (total_redraws) *total_redraws = std::accumulate(redraws.begin(), redraws.end(), 0);
    return samples;
}

BootstrapCI metric_confidence_intervals(
    const std::function<double(const std::vector<std::size_t>&)>& metric,
    const std::vector<int>& outcomes, int n_categories, int B, std::uint64_t seed) {
    BootstrapCI out;
    const auto samples = bootstrap_resamples(outcomes, n_categories, B, seed, &out.redraws);
    std::vector<double> values(samples.size());
    parallel_for_index(samples.size(), [&](std::size_t r) { values[r] = metric(samples[r]); });
    out.interval.low = quantile_type7(values, 0.025);
    out.interval.high = quantile_type7(values, 0.975);
    return out;
}

namespace {

Eigen::MatrixXd subset_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
    return out;
}

std::vector<int> subset_outcomes(const std::vector<int>& y, const std::vector<std::size_t>& idx) {
    std::vector<int> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = y[idx[i]];
    return out;
}

} // namespace

CalibrationReport calibration_report(const MultinomialModel& m, const Dataset& d,
                                     const EvaluationOptions& opts) {
    const std::vector<int> y = outcomes_in_model_order(m, d);
    const Eigen::MatrixXd lps = linear_predictor_matrix(m, d);
    const Eigen::MatrixXd probs = probability_matrix_from_lps(lps);

    CalibrationReport report;
    report.categories = m.categories;
    report.oe = mean_calibration(probs, y, m.categories);
    report.weak = weak_calibration(lps, y);
    for (std::size_t c = 0; c < m.categories.size(); ++c)
        report.weak_binary.push_back(
            weak_calibration_binary_approx(probs, y, c, m.categories[c]));
    report.curves = moderate_calibration_curve(lps, y, opts.curve);
    return report;
}

DiscriminationReport discrimination_report(const MultinomialModel& m, const Dataset& d,
                                           const EvaluationOptions& opts) {
    const std::vector<int> y = outcomes_in_model_order(m, d);
    const Eigen::MatrixXd probs = probability_matrix(m, d);
    const int k = static_cast<int>(m.n_categories());

    DiscriminationReport report;
    report.pdi = pdi(probs, y);
    report.pdi_lower_limit = 1.0 / static_cast<double>(k);

    int redraws = 0;
    const auto samples = bootstrap_resamples(y, k, opts.bootstrap_B, opts.seed, &redraws);

    auto metric_ci = [&](const std::function<double(const Eigen::MatrixXd&,
                                                    const std::vector<int>&)>& f) {
        std::vector<double> values(samples.size());
        parallel_for_index(samples.size(), [&](std::size_t r) {
            values[r] = f(subset_rows(probs, samples[r]), subset_outcomes(y, samples[r]));
        });
        Interval ci;
        ci.low = quantile_type7(values, 0.025);
        ci.high = quantile_type7(values, 0.975);
        return ci;
    };

    report.pdi_ci = metric_ci([](const Eigen::MatrixXd& p, const std::vector<int>& yy) {
        return pdi(p, yy);
    });

    for (std::size_t a = 0; a < static_cast<std::size_t>(k); ++a) {
        for (std::size_t b = a + 1; b < static_cast<std::size_t>(k); ++b) {
            PairwiseCResult pc;
            pc.cat_a = a;
            pc.cat_b = b;
            pc.label = m.categories[a] + " vs " + m.categories[b];
            pc.conditional = pairwise_c(probs, y, a, b, PairwiseMethod::conditional_risk);
            pc.conditional_ci = metric_ci([a, b](const Eigen::MatrixXd& p,
                                                 const std::vector<int>& yy) {
                return pairwise_c(p, yy, a, b, PairwiseMethod::conditional_risk);
            });
            if (a == 0) {
                pc.submodel = pairwise_c(probs, y, a, b, PairwiseMethod::submodel);
                pc.submodel_ci = metric_ci([a, b](const Eigen::MatrixXd& p,
                                                  const std::vector<int>& yy) {
                    return pairwise_c(p, yy, a, b, PairwiseMethod::submodel);
                });
            }
            report.pairwise.push_back(std::move(pc));
        }
    }
    return report;
}

std::string curves_to_csv(const std::vector<std::string>& categories,
                          const ModerateCurves& curves) {
    std::ostringstream out;
    out << "category,predicted,observed_smoothed\n";
    for (std::size_t c = 0; c < curves.per_category.size(); ++c) {
        const std::string label = c < categories.size() ? categories[c] : std::to_string(c);
        const bool quote = label.find_first_of(",\"\n\r") != std::string::npos;
        std::string quoted = label;
        if (quote) {
            quoted = "\"";
            for (char ch : label) quoted += (ch == '"') ? std::string("\"\"") : std::string(1, ch);
            quoted += '"';
        }
        for (const auto& pt : curves.per_category[c])
            out << quoted << ',' << format_double(pt.predicted) << ','
                << format_double(pt.observed_smoothed) << '\n';
    }
    return out.str();
}

} // namespace mpm
