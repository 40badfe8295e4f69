#pragma once

#include "mpm/dataset.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace mpm {

// A fitted multinomial prediction model. Submodel j (row j of the coefficient
// matrix) holds the intercept and predictor coefficients of the log-odds of
// category j+1 against the reference (category 0):
//   LP_j = beta[j][0] + sum_i beta[j][i+1] * x_i
struct MultinomialModel {
    std::vector<std::string> categories;      // reference first, size k >= 2
    std::vector<std::string> predictor_names; // size p
    Eigen::MatrixXd coefficients;             // (k-1) x (p+1), column 0 = intercept

    std::size_t n_categories() const { return categories.size(); }
    std::size_t n_predictors() const { return predictor_names.size(); }

    // Throws DataError when dimensions/labels/values violate the invariants.
    void validate() const;
};

// LP_j for one subject; row must have p entries.
Eigen::VectorXd linear_predictors(const MultinomialModel& m, std::span<const double> row);

// Predicted probability per category (reference first), max-shift stabilized;
// sums to 1 within 1e-10 for linear predictors up to +-700.
Eigen::VectorXd predicted_probabilities(const MultinomialModel& m,
                                        std::span<const double> row);

Eigen::VectorXd probabilities_from_lps(const Eigen::VectorXd& lps);

// Batch paths used throughout evaluation; d must carry all model predictors
// (matched by name, extra columns ignored). Rows of the results align with d.
Eigen::MatrixXd linear_predictor_matrix(const MultinomialModel& m, const Dataset& d);
Eigen::MatrixXd probability_matrix(const MultinomialModel& m, const Dataset& d); // n x k
Eigen::MatrixXd probability_matrix_from_lps(const Eigen::MatrixXd& lps);         // n x k

// Model JSON: {"categories":[...],"reference":...,"predictors":[...],
// "coefficients":[[...],...]} with numbers written to 17 significant digits so
// serialize/deserialize round-trips bit-exactly.
std::string serialize(const MultinomialModel& m);
MultinomialModel deserialize(const std::string& json_text);

// Updated models carry a provenance block; deserialize ignores it.
struct ModelProvenance {
    std::string strategy;
    std::string source_model_hash;    // fnv1a64 of the source model's JSON
    std::string dataset_fingerprint;  // fnv1a64 of the update data's canonical CSV
};
std::string serialize(const MultinomialModel& m, const ModelProvenance& provenance);
MultinomialModel load_model(const std::string& path);
void save_model(const MultinomialModel& m, const std::string& path);

// Outcome indices of d remapped to the model's category order.
// Throws DataError on labels unknown to the model.
std::vector<int> outcomes_in_model_order(const MultinomialModel& m, const Dataset& d);

// Prediction CSV: header = category labels, one probability row per subject.
std::string prediction_csv(const MultinomialModel& m, const Dataset& d);

} // namespace mpm
