#pragma once

// Test-only oracles, deliberately independent of the library's computation
// paths: plain-formula likelihood, finite differences, coordinate grid
// refinement, tuple enumeration and O(n^2) pair counting.

#include "mpm/dataset.hpp"
#include "mpm/numeric.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace oracle {

// Multinomial log-likelihood, straight from the probability formulas.
double loglik(const Eigen::MatrixXd& X, const std::vector<int>& y,
              const Eigen::MatrixXd& beta);

// Central finite differences of the log-likelihood, equation-major order.
Eigen::VectorXd fd_gradient(const Eigen::MatrixXd& X, const std::vector<int>& y,
                            const Eigen::MatrixXd& beta, double h = 1e-5);

// Coordinatewise grid refinement of the log-likelihood: repeated passes of a
// 1D grid per coefficient with shrinking span. Converges on the concave
// multinomial likelihood; accuracy ~ final span.
Eigen::MatrixXd grid_maximize(const Eigen::MatrixXd& X, const std::vector<int>& y, int k,
                              double span = 8.0, double final_span = 1e-5);

// PDI by direct tuple enumeration (independent of the library's version).
double pdi_bruteforce(const Eigen::MatrixXd& probs, const std::vector<int>& outcomes);

// Pairwise c by O(n^2) pair counting, ties 1/2. Scores: conditional risk
// p_b/(p_a+p_b); subjects of category b are the cases.
double pairwise_c_bruteforce(const Eigen::MatrixXd& probs, const std::vector<int>& outcomes,
                             std::size_t cat_a, std::size_t cat_b);

// Outcomes drawn from a multinomial model's probabilities at given rows.
std::vector<int> draw_outcomes(const Eigen::MatrixXd& probs, mpm::Rng& rng);

// Synthetic dataset: p standard-normal predictors, outcome from the model.
mpm::Dataset synthetic_dataset(const Eigen::MatrixXd& beta, std::size_t n, std::uint64_t seed,
                               const std::vector<std::string>& categories = {},
                               const std::vector<std::string>& predictors = {});

// Dataset from explicit columns.
mpm::Dataset make_dataset(const std::vector<std::vector<double>>& columns,
                          const std::vector<int>& outcome, std::size_t k);

} // namespace oracle
