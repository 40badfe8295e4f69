#pragma once

#include "mpm/dataset.hpp"
#include "mpm/model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace mpm {

struct GlmOptions {
    int max_iterations = 100;
    double gradient_tol = 1e-8;      // max-norm, standardized scale
    double loglik_rel_tol = 1e-12;
    double coefficient_bound = 15.0; // separation guard, standardized scale
    bool standardize = true;
};

// Low-level maximum-likelihood fit of a multinomial logistic model on an
// explicit design matrix. The intercept column is added by the engine; X may
// have zero columns (intercept-only). offsets, when non-empty, is n x (k-1)
// and enters each equation's linear predictor with coefficient fixed to 1.
//
// Parameter vectors (gradient, information) are ordered equation-major:
// index = j*(q+1) + a for equation j, coefficient a (a = 0 is the intercept).
struct GlmFit {
    Eigen::MatrixXd coefficients; // (k-1) x (q+1), original scale
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    Eigen::MatrixXd observed_information; // (k-1)(q+1) square, original scale
    Eigen::MatrixXd standard_errors;      // (k-1) x (q+1)
};

GlmFit fit_multinomial_glm(const Eigen::MatrixXd& X, const std::vector<int>& y, int k,
                           const Eigen::MatrixXd& offsets = {}, const GlmOptions& opts = {});

struct FitResult {
    MultinomialModel model;
    double log_likelihood = 0.0;
    double aic = 0.0;
    int iterations = 0;
    bool converged = false;
    Eigen::MatrixXd observed_information; // (k-1)(p+1) square
    Eigen::MatrixXd standard_errors;      // (k-1) x (p+1)
};

FitResult fit(const Dataset& d, const GlmOptions& opts = {});

// Multinomial log-likelihood with analytic derivatives at the given model's
// coefficients; the Hessian is the negative of the observed information.
struct LoglikDerivatives {
    double log_likelihood;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};
LoglikDerivatives log_likelihood_gradient_hessian(const MultinomialModel& m,
                                                  const Dataset& d);

// Power-transformation (non-linearity) search for one predictor: candidate
// formulations {x}, {x, ln x}, {x, x^2}, {x, x^3}, each fitted as the sole
// predictor set; minimum AIC wins, the untransformed model on ties.
struct TransformCandidate {
    std::string label;
    bool available = false;
    bool skipped = false; // ln candidate on nonpositive data
    std::string note;
    double aic = 0.0;
};

struct TransformSearchResult {
    std::string predictor;
    std::vector<TransformCandidate> candidates;
    std::size_t selected_index = 0;
};

TransformSearchResult transform_search(const Dataset& d, const std::string& predictor,
                                       const GlmOptions& opts = {});

} // namespace mpm
