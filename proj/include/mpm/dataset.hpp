#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mpm {

// Rectangular numeric predictor table plus a categorical outcome column.
// Categories are ordered with the reference first, then first appearance.
// Loading rejects missing cells and non-numeric predictor values outright;
// categorical predictors must be pre-encoded as numeric (e.g. 0/1) columns.
struct Dataset {
    std::vector<std::string> predictor_names;
    std::vector<std::vector<double>> columns; // one vector per predictor, length n
    std::vector<std::string> categories;      // reference first
    std::vector<int> outcome;                 // index into categories, length n
    std::string outcome_name = "outcome";

    std::size_t n_rows() const { return outcome.size(); }
    std::size_t n_predictors() const { return predictor_names.size(); }
    std::size_t n_categories() const { return categories.size(); }
    std::vector<std::size_t> category_counts() const;
};

Dataset load_csv(const std::string& path, const std::string& outcome_column,
                 const std::string& reference_category);

// Raw table split (RFC-4180 style quoting), no typing.
std::vector<std::vector<std::string>> parse_csv_table(const std::string& text);

// Same parser on an in-memory document (used by tests and fingerprinting).
Dataset parse_csv(const std::string& text, const std::string& outcome_column,
                  const std::string& reference_category);

std::string to_csv(const Dataset& d);
void save_csv(const Dataset& d, const std::string& path);

struct PredictorSummary {
    std::string name;
    double median;
    double q25;
    double q75;
    double mean;
    double sd;
};

struct CategorySummary {
    std::string label;
    std::size_t count;
    double prevalence;
};

struct CaseMixSummary {
    std::size_t n = 0;
    std::vector<PredictorSummary> predictors;
    std::vector<CategorySummary> categories;
};

CaseMixSummary describe(const Dataset& d);

struct CaseMixRow {
    std::string name;
    double dev_value;
    double val_value;
    double difference; // val - dev
};

struct CaseMixComparison {
    std::vector<CaseMixRow> predictor_medians;
    std::vector<CaseMixRow> predictor_means;
    struct CategoryRow {
        std::string label;
        double dev_prevalence;
        double val_prevalence;
        double ratio; // val / dev
    };
    std::vector<CategoryRow> categories;
};

CaseMixComparison compare_casemix(const CaseMixSummary& dev, const CaseMixSummary& val);

} // namespace mpm
