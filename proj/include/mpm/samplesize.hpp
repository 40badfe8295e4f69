#pragma once

#include <string>
#include <vector>

namespace mpm {

// --- development sample size (three criteria, unrounded intermediates) ---

struct DevSampleSizeInput {
    int q_parameters = 0;       // candidate predictor parameter count Q
    std::vector<double> events; // EV_k, one per outcome category
    double shrinkage = 0.9;     // S, targeted global shrinkage
    double r2_fraction = 0.15;  // anticipated fraction of max Cox-Snell R^2
    double delta = 0.05;        // intercept precision margin
    double chisq_divisor = 5.0; // alpha divisor inside qchisq(1 - 0.05/divisor, 1)
};

struct DevPairResult {
    std::size_t cat_a = 0; // 0-based
    std::size_t cat_b = 0;
    double phi = 0.0;         // EV_b / (EV_a + EV_b)
    double p_pair = 0.0;      // (EV_a + EV_b) / n
    double r2_adj_pair = 0.0;
    double m = 0.0;
    double n = 0.0; // m / p_pair
};

struct DevSampleSizeResult {
    double n_total = 0.0;
    std::vector<double> prevalences;
    double max_r2cs = 0.0;
    double r2cs_adj = 0.0;
    std::vector<DevPairResult> pairs;
    long criterion1 = 0;
    double criterion2_raw = 0.0;
    long criterion2 = 0;
    std::vector<double> criterion3_raw; // NC_{3,k}
    long criterion3 = 0;
    long final_n = 0;
    int driving_criterion = 0; // 1-based
};

DevSampleSizeResult dev_sample_size(const DevSampleSizeInput& in);

// --- external validation sample size (per submodel, choose the larger) ---

struct ExtSubmodelInput {
    std::string label;
    double prevalence = 0.0;  // expected outcome prevalence phi
    double se_oe = 0.0;       // target SE of ln(O/E)
    double lp_mean = 0.0;
    double lp_sd = 0.0;
    double se_slope = 0.0;    // target SE of the calibration slope
    double c_statistic = 0.0; // expected C
    double se_c = 0.0;        // target SE of C
};

struct ExtSubmodelResult {
    std::string label;
    double n_oe_raw = 0.0;
    long n_oe = 0;
    double n_slope_raw = 0.0;
    long n_slope = 0;
    double n_c_raw = 0.0;
    long n_c = 0;
    long submodel_max = 0;
    std::string driving; // criterion name
};

struct ExtSampleSizeResult {
    std::vector<ExtSubmodelResult> submodels;
    long overall = 0;
    std::string driving; // "<label>: <criterion>"
    int quadrature_nodes = 0;
};

// O/E: n = (1-phi)/(phi*SE^2). Calibration slope: expected unit Fisher
// information of the binary logistic calibration model at (intercept,slope) =
// (0,1) under LP ~ Normal(mean, sd), by Gauss-Hermite quadrature with a
// node-doubling convergence check; n = I_aa/(SE^2 (I_aa I_bb - I_ab^2)).
// C-statistic: smallest n with SE(C) <= target where
// SE(C)^2 = C(1-C)(1 + (n/2-1)(1-C)/(2-C) + (n/2-1)C/(1+C)) / (n^2 phi(1-phi)).
// Each continuous solution is rounded to the nearest integer.
ExtSampleSizeResult ext_sample_size(const std::vector<ExtSubmodelInput>& submodels,
                                    int quadrature_nodes = 64);

} // namespace mpm
