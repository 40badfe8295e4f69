#include "mpm/dataset.hpp"

#include "mpm/errors.hpp"
#include "mpm/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace mpm {

namespace {

// RFC-4180 style: comma separated, double quotes for fields containing
// commas/quotes/newlines, "" escapes a quote inside a quoted field.
std::vector<std::vector<std::string>> split_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            quoted = true;
            any = true;
            break;
        case ',':
            row.push_back(std::move(field));
            field.clear();
            any = true;
            break;
        case '\r':
            break;
        case '\n':
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
            break;
        default:
            field += c;
            any = true;
            break;
        }
    }
    if (any || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    if (quoted) throw DataError("CSV ends inside a quoted field");
    return rows;
}

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
    return s.substr(a, b - a);
}

double parse_number(const std::string& raw, std::size_t row, const std::string& column) {
    const std::string cell = trim(raw);
    if (cell.empty())
        throw DataError("missing value at row " + std::to_string(row) + ", column '" +
                        column + "'");
    double value = 0.0;
    const auto* begin = cell.data();
    const auto* end = cell.data() + cell.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end)
        throw DataError("non-numeric predictor value '" + cell + "' at row " +
                        std::to_string(row) + ", column '" + column + "'");
    if (!std::isfinite(value))
        throw DataError("non-finite predictor value at row " + std::to_string(row) +
                        ", column '" + column + "'");
    return value;
}

bool needs_quotes(const std::string& s) {
    return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quote_csv(const std::string& s) {
    if (!needs_quotes(s)) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

} // namespace

std::vector<std::vector<std::string>> parse_csv_table(const std::string& text) {
    return split_csv(text);
}

std::vector<std::size_t> Dataset::category_counts() const {
    std::vector<std::size_t> counts(categories.size(), 0);
    for (int c : outcome) counts[static_cast<std::size_t>(c)]++;
    return counts;
}

Dataset parse_csv(const std::string& text, const std::string& outcome_column,
                  const std::string& reference_category) {
    const auto rows = split_csv(text);
    if (rows.empty()) throw DataError("CSV has no header row");
    const auto& header = rows.front();

    std::size_t outcome_idx = header.size();
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (trim(header[j]) == outcome_column) {
            outcome_idx = j;
            break;
        }
    }
    if (outcome_idx == header.size())
        throw DataError("outcome column '" + outcome_column + "' not found in header");

    Dataset d;
    d.outcome_name = outcome_column;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == outcome_idx) continue;
        const std::string name = trim(header[j]);
        if (name.empty())
            throw DataError("empty predictor name in header column " + std::to_string(j + 1));
        if (std::find(d.predictor_names.begin(), d.predictor_names.end(), name) !=
            d.predictor_names.end())
            throw DataError("duplicate column name '" + name + "'");
        d.predictor_names.push_back(name);
    }
    d.columns.assign(d.predictor_names.size(), {});

    d.categories.push_back(reference_category);
    std::unordered_map<std::string, int> category_index{{reference_category, 0}};

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && trim(row[0]).empty() && r + 1 == rows.size()) break; // trailing blank line
        if (row.size() != header.size())
            throw DataError("row " + std::to_string(r + 1) + " has " +
                            std::to_string(row.size()) + " fields, expected " +
                            std::to_string(header.size()));
        const std::string label = trim(row[outcome_idx]);
        if (label.empty())
            throw DataError("missing value at row " + std::to_string(r + 1) + ", column '" +
                            d.outcome_name + "'");
        auto it = category_index.find(label);
        if (it == category_index.end()) {
            it = category_index.emplace(label, static_cast<int>(d.categories.size())).first;
            d.categories.push_back(label);
        }
        d.outcome.push_back(it->second);

        std::size_t p = 0;
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j == outcome_idx) continue;
            d.columns[p].push_back(parse_number(row[j], r + 1, d.predictor_names[p]));
            ++p;
        }
    }

    if (d.outcome.empty()) throw DataError("CSV contains no data rows");
    if (d.categories.size() < 2)
        throw DataError("outcome column has fewer than 2 distinct categories");
    const auto counts = d.category_counts();
    if (counts[0] == 0)
        throw DataError("reference category '" + reference_category +
                        "' does not occur in the outcome column");
    return d;
}

Dataset load_csv(const std::string& path, const std::string& outcome_column,
                 const std::string& reference_category) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), outcome_column, reference_category);
}

std::string to_csv(const Dataset& d) {
    std::ostringstream out;
    for (std::size_t j = 0; j < d.predictor_names.size(); ++j)
        out << quote_csv(d.predictor_names[j]) << ',';
    out << quote_csv(d.outcome_name) << '\n';
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        for (std::size_t j = 0; j < d.columns.size(); ++j)
            out << format_double(d.columns[j][i]) << ',';
        out << quote_csv(d.categories[static_cast<std::size_t>(d.outcome[i])]) << '\n';
    }
    return out.str();
}

void save_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << to_csv(d);
}

CaseMixSummary describe(const Dataset& d) {
    CaseMixSummary s;
    s.n = d.n_rows();
    for (std::size_t j = 0; j < d.n_predictors(); ++j) {
        const auto& col = d.columns[j];
        PredictorSummary ps;
        ps.name = d.predictor_names[j];
        ps.median = quantile_type7(col, 0.5);
        ps.q25 = quantile_type7(col, 0.25);
        ps.q75 = quantile_type7(col, 0.75);
        ps.mean = mean(col);
        ps.sd = sample_sd(col);
        s.predictors.push_back(ps);
    }
    const auto counts = d.category_counts();
    for (std::size_t c = 0; c < d.n_categories(); ++c) {
        s.categories.push_back({d.categories[c], counts[c],
                                static_cast<double>(counts[c]) / static_cast<double>(s.n)});
    }
    return s;
}

CaseMixComparison compare_casemix(const CaseMixSummary& dev, const CaseMixSummary& val) {
    auto mismatch = [](const std::string& what) {
        throw DataError("case-mix comparison: " + what +
                        " differ between development and validation summaries");
    };
    if (dev.predictors.size() != val.predictors.size()) mismatch("predictor sets");
    for (std::size_t j = 0; j < dev.predictors.size(); ++j)
        if (dev.predictors[j].name != val.predictors[j].name) mismatch("predictor sets");
    if (dev.categories.size() != val.categories.size()) mismatch("category sets");
    for (std::size_t c = 0; c < dev.categories.size(); ++c)
        if (dev.categories[c].label != val.categories[c].label) mismatch("category sets");

    CaseMixComparison cmp;
    for (std::size_t j = 0; j < dev.predictors.size(); ++j) {
        const auto& a = dev.predictors[j];
        const auto& b = val.predictors[j];
        cmp.predictor_medians.push_back({a.name, a.median, b.median, b.median - a.median});
        cmp.predictor_means.push_back({a.name, a.mean, b.mean, b.mean - a.mean});
    }
    for (std::size_t c = 0; c < dev.categories.size(); ++c) {
        const auto& a = dev.categories[c];
        const auto& b = val.categories[c];
        cmp.categories.push_back(
            {a.label, a.prevalence, b.prevalence, b.prevalence / a.prevalence});
    }
    return cmp;
}

} // namespace mpm
