#pragma once

#include "mpm/dataset.hpp"
#include "mpm/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mpm {

struct Interval {
    double low = std::numeric_limits<double>::quiet_NaN();
    double high = std::numeric_limits<double>::quiet_NaN();
    bool valid() const { return low == low && high == high; }
};

// Level 1: observed/expected ratio per category. CI on the log scale with
// SE(ln O/E) = sqrt((1-prevalence)/observed).
struct OERatio {
    std::string category;
    double observed = 0.0; // event count
    double expected = 0.0; // sum of predicted risks
    double ratio = 0.0;
    Interval ci;
    double mean_predicted = 0.0;
    double prevalence = 0.0;
};

std::vector<OERatio> mean_calibration(const Eigen::MatrixXd& probs,
                                      const std::vector<int>& outcomes,
                                      const std::vector<std::string>& categories);

// Level 2, multinomial framework. The slope matrix is the MLE of the outcome
// regressed on all k-1 linear predictors (each equation sees every LP); its
// diagonal holds the c-slopes. Intercepts come from the intercept-only fit
// with each equation's own LP as a fixed offset.
struct WeakCalibration {
    Eigen::VectorXd intercepts;  // k-1
    std::vector<Interval> intercept_ci;
    Eigen::MatrixXd slope_matrix; // (k-1) x (k-1); entry (j,m): LP_m in equation j
    std::vector<std::vector<Interval>> slope_ci;
};

WeakCalibration weak_calibration(const Eigen::MatrixXd& lps,
                                 const std::vector<int>& outcomes);

// Level 2, per-category binary approximation on s = logit(risk).
struct BinaryWeakCalibration {
    std::string category;
    double intercept = 0.0;
    Interval intercept_ci;
    double slope = 0.0;
    Interval slope_ci;
};

BinaryWeakCalibration weak_calibration_binary_approx(const Eigen::MatrixXd& probs,
                                                     const std::vector<int>& outcomes,
                                                     std::size_t category,
                                                     const std::string& label = "");

// Level 3: smoothed calibration curves from a multinomial recalibration on a
// natural cubic spline basis of each LP.
struct ModerateCurveOptions {
    std::size_t min_subjects = 50;
    std::vector<double> knot_quantiles = {0.05, 0.35, 0.65, 0.95};
};

struct CurvePoint {
    double predicted;
    double observed_smoothed;
};

struct ModerateCurves {
    std::vector<std::vector<CurvePoint>> per_category; // size k, sorted by predicted
    bool linear_fallback = false;
    bool degenerate = false; // constant LPs collapse to one point per category
};

ModerateCurves moderate_calibration_curve(const Eigen::MatrixXd& lps,
                                          const std::vector<int>& outcomes,
                                          const ModerateCurveOptions& opts = {});

// Polytomous discrimination index. Over every tuple of one subject per
// category, category j scores 1 when its subject holds the strictly largest
// category-j risk, 1/m under an m-way tie including it, 0 otherwise; the PDI
// averages the scores over tuples and categories. Lower limit 1/k.
double pdi(const Eigen::MatrixXd& probs, const std::vector<int>& outcomes);
double pdi_enumerated(const Eigen::MatrixXd& probs, const std::vector<int>& outcomes);
double pdi_rank(const Eigen::MatrixXd& probs, const std::vector<int>& outcomes);

enum class PairwiseMethod { submodel, conditional_risk };

// Mann-Whitney c-statistic restricted to two categories, ties counted 1/2.
// submodel scores by the non-reference category's linear predictor and is
// only defined for pairs involving the reference; conditional_risk scores by
// p_b / (p_a + p_b) and applies to any pair.
double pairwise_c(const Eigen::MatrixXd& probs, const std::vector<int>& outcomes,
                  std::size_t cat_a, std::size_t cat_b, PairwiseMethod method);

// Percentile bootstrap CI for any metric evaluated on subject index subsets.
// Resamples containing an unobserved category are redrawn (at most 100 tries
// per replicate). Deterministic given the seed; replicate r draws from a
// generator seeded with seed + r.
struct BootstrapCI {
    Interval interval;
    int redraws = 0;
};

BootstrapCI metric_confidence_intervals(
    const std::function<double(const std::vector<std::size_t>&)>& metric,
    const std::vector<int>& outcomes, int n_categories, int B, std::uint64_t seed);

std::vector<std::vector<std::size_t>> bootstrap_resamples(const std::vector<int>& outcomes,
                                                          int n_categories, int B,
                                                          std::uint64_t seed,
                                                          int* total_redraws = nullptr);

struct PairwiseCResult {
    std::size_t cat_a = 0;
    std::size_t cat_b = 0;
    std::string label;
    double conditional = 0.0;
    Interval conditional_ci;
    std::optional<double> submodel; // pairs involving the reference only
    Interval submodel_ci;
};

struct DiscriminationReport {
    double pdi = 0.0;
    double pdi_lower_limit = 0.0; // 1/k
    Interval pdi_ci;
    std::vector<PairwiseCResult> pairwise;
};

struct CalibrationReport {
    std::vector<std::string> categories;
    std::vector<OERatio> oe;
    WeakCalibration weak;
    std::vector<BinaryWeakCalibration> weak_binary; // size k
    ModerateCurves curves;
};

struct EvaluationOptions {
    int bootstrap_B = 200;
    std::uint64_t seed = 0;
    ModerateCurveOptions curve;
};

CalibrationReport calibration_report(const MultinomialModel& m, const Dataset& d,
                                     const EvaluationOptions& opts = {});
DiscriminationReport discrimination_report(const MultinomialModel& m, const Dataset& d,
                                           const EvaluationOptions& opts = {});

// Curve CSV: "category,predicted,observed_smoothed", one row per point.
std::string curves_to_csv(const std::vector<std::string>& categories,
                          const ModerateCurves& curves);

} // namespace mpm
