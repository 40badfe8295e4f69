#pragma once

#include "mpm/dataset.hpp"
#include "mpm/fit.hpp"
#include "mpm/metrics.hpp"
#include "mpm/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mpm {

// Metric set carried through the optimism loop: PDI, conditional-risk
// pairwise c-statistics (pairs in lexicographic order), and the diagonal
// c-slopes of the weak-calibration slope matrix. O/E is excluded: for an MLE
// fit the apparent O/E is 1 by construction.
struct ValidationMetrics {
    double pdi = 0.0;
    std::vector<double> pairwise_c;
    std::vector<double> c_slopes;
};

struct InternalValidationResult {
    ValidationMetrics apparent;
    ValidationMetrics mean_optimism;
    ValidationMetrics adjusted; // apparent - mean optimism, elementwise
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::string> categories;
    int B = 0;
    std::uint64_t seed = 0;
    int failed_replicates = 0;
    int used_replicates = 0;
};

// Resampling hook; the default draws n subjects with replacement from a
// generator seeded with seed + replicate index.
using Resampler =
    std::function<std::vector<std::size_t>(std::uint64_t replicate_seed, std::size_t n)>;

// Harrell optimism loop: per replicate, resample, refit, evaluate on the
// replicate (apparent_b) and on the original data (test_b); the optimism is
// mean(apparent_b - test_b). Replicates whose fit or evaluation fails are
// dropped and counted; more than 20% failures aborts.
InternalValidationResult internal_validate(const Dataset& d, int B, std::uint64_t seed,
                                           const GlmOptions& fit_opts = {});
InternalValidationResult internal_validate_with_resampler(const Dataset& d, int B,
                                                           std::uint64_t seed,
                                                           const Resampler& resampler,
                                                           const GlmOptions& fit_opts = {});

struct ExternalValidationReport {
    CalibrationReport calibration;
    DiscriminationReport discrimination;
    CaseMixSummary validation_casemix;
    std::optional<CaseMixComparison> casemix_comparison; // when a dev summary is given
};

// Predictions use the frozen coefficients exactly as developed; the model is
// never mutated.
ExternalValidationReport external_validate(const MultinomialModel& m, const Dataset& d_val,
                                           const CaseMixSummary* dev_summary = nullptr,
                                           const EvaluationOptions& opts = {});

enum class UpdateStrategy { recalibration, refit };

struct UpdateResult {
    UpdateStrategy strategy = UpdateStrategy::recalibration;
    // (k-1) x k recalibration coefficients: column 0 the intercept alpha_{0,j},
    // column m+1 the coefficient of LP_m in equation j. Empty for refit.
    Eigen::MatrixXd alpha;
    MultinomialModel updated;
    ExternalValidationReport pre;  // original model on the update data
    ExternalValidationReport post; // updated model on the update data
};

// Box 2 composition: gamma_{0,j} = alpha_{0,j} + sum_m alpha_{m,j} beta_{0,m};
// gamma_{i,j} = sum_m alpha_{m,j} beta_{i,m} for predictors i.
Eigen::MatrixXd compose_recalibration(const Eigen::MatrixXd& beta,
                                      const Eigen::MatrixXd& alpha);

UpdateResult recalibrate(const MultinomialModel& m, const Dataset& d_new,
                         const EvaluationOptions& opts = {},
                         const GlmOptions& fit_opts = {});
UpdateResult refit(const MultinomialModel& m, const Dataset& d_new,
                   const EvaluationOptions& opts = {}, const GlmOptions& fit_opts = {});

} // namespace mpm
