#include "mpm/model.hpp"

#include "mpm/errors.hpp"
#include "mpm/kernels.hpp"
#include "mpm/numeric.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace mpm {

void MultinomialModel::validate() const {
    const std::size_t k = categories.size();
    const std::size_t p = predictor_names.size();
    if (k < 2) throw DataError("model needs at least 2 outcome categories");
    if (coefficients.rows() != static_cast<Eigen::Index>(k - 1) ||
        coefficients.cols() != static_cast<Eigen::Index>(p + 1))
        throw DataError("coefficient matrix must be (k-1) x (p+1); got " +
                        std::to_string(coefficients.rows()) + " x " +
                        std::to_string(coefficients.cols()));
    if (!coefficients.allFinite()) throw DataError("non-finite coefficient in model");
    std::unordered_set<std::string> seen;
    for (const auto& name : predictor_names) {
        if (name.empty()) throw DataError("empty predictor name in model");
        if (!seen.insert(name).second)
            throw DataError("duplicate predictor name '" + name + "' in model");
    }
    std::unordered_set<std::string> cats;
    for (const auto& c : categories)
        if (!cats.insert(c).second)
            throw DataError("duplicate category label '" + c + "' in model");
}

Eigen::VectorXd linear_predictors(const MultinomialModel& m, std::span<const double> row) {
    if (row.size() != m.n_predictors())
        throw DataError("predictor row has " + std::to_string(row.size()) +
                        " values, model expects " + std::to_string(m.n_predictors()));
    for (double v : row)
        if (!std::isfinite(v)) throw DataError("non-finite predictor value");
    const auto k1 = m.coefficients.rows();
    Eigen::VectorXd lp = m.coefficients.col(0);
    for (Eigen::Index j = 0; j < k1; ++j)
        for (std::size_t i = 0; i < row.size(); ++i)
            lp[j] += m.coefficients(j, static_cast<Eigen::Index>(i + 1)) * row[i];
    return lp;
}

Eigen::VectorXd probabilities_from_lps(const Eigen::VectorXd& lps) {
    const Eigen::Index k1 = lps.size();
    Eigen::VectorXd prob(k1 + 1);
    double shift = 0.0;
    for (Eigen::Index j = 0; j < k1; ++j) shift = std::max(shift, lps[j]);
    double denom = std::exp(-shift);
    prob[0] = denom;
    for (Eigen::Index j = 0; j < k1; ++j) {
        const double e = std::exp(lps[j] - shift);
        prob[j + 1] = e;
        denom += e;
    }
    prob /= denom;
    return prob;
}

Eigen::VectorXd predicted_probabilities(const MultinomialModel& m,
                                        std::span<const double> row) {
    return probabilities_from_lps(linear_predictors(m, row));
}

namespace {

// columns of d matched to the model's predictor names
std::vector<const std::vector<double>*> model_columns(const MultinomialModel& m,
                                                      const Dataset& d) {
    std::vector<const std::vector<double>*> cols;
    cols.reserve(m.n_predictors());
    for (const auto& name : m.predictor_names) {
        const auto it = std::find(d.predictor_names.begin(), d.predictor_names.end(), name);
        if (it == d.predictor_names.end())
            throw DataError("dataset is missing model predictor column '" + name + "'");
        cols.push_back(&d.columns[static_cast<std::size_t>(it - d.predictor_names.begin())]);
    }
    return cols;
}

} // namespace

Eigen::MatrixXd linear_predictor_matrix(const MultinomialModel& m, const Dataset& d) {
    const auto cols = model_columns(m, d);
    const Eigen::Index n = static_cast<Eigen::Index>(d.n_rows());
    const Eigen::Index k1 = m.coefficients.rows();
    Eigen::MatrixXd lps(n, k1);
    for (Eigen::Index j = 0; j < k1; ++j) lps.col(j).setConstant(m.coefficients(j, 0));
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const Eigen::Map<const Eigen::VectorXd> x(cols[i]->data(), n);
        for (Eigen::Index j = 0; j < k1; ++j)
            lps.col(j) += m.coefficients(j, static_cast<Eigen::Index>(i + 1)) * x;
    }
    return lps;
}

Eigen::MatrixXd probability_matrix_from_lps(const Eigen::MatrixXd& lps) {
    const Eigen::Index n = lps.rows();
    const Eigen::Index k1 = lps.cols();
    Eigen::MatrixXd probs(n, k1 + 1);
    std::vector<const double*> lp_cols(static_cast<std::size_t>(k1));
    std::vector<double*> prob_cols(static_cast<std::size_t>(k1 + 1));
    for (Eigen::Index j = 0; j < k1; ++j) lp_cols[static_cast<std::size_t>(j)] = lps.col(j).data();
    for (Eigen::Index c = 0; c <= k1; ++c) prob_cols[static_cast<std::size_t>(c)] = probs.col(c).data();
    kernels::active().softmax(lp_cols.data(), static_cast<std::size_t>(k1), prob_cols.data(),
                              static_cast<std::size_t>(n));
    return probs;
}

Eigen::MatrixXd probability_matrix(const MultinomialModel& m, const Dataset& d) {
    return probability_matrix_from_lps(linear_predictor_matrix(m, d));
}

namespace {

std::string json_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default: out += c; break;
        }
    }
    out += '"';
    return out;
}

} // namespace

std::string serialize(const MultinomialModel& m, const ModelProvenance& provenance) {
    std::string base = serialize(m);
    // insert the provenance object before the closing brace
    const auto pos = base.rfind("\n}");
    std::string block = ",\n  \"provenance\": {\"strategy\": " + json_quote(provenance.strategy) +
                        ", \"source_model_hash\": " + json_quote(provenance.source_model_hash) +
                        ", \"dataset_fingerprint\": " +
                        json_quote(provenance.dataset_fingerprint) + "}";
    base.insert(pos, block);
    return base;
}

std::string serialize(const MultinomialModel& m) {
    m.validate();
    const auto& quote = json_quote;
    std::ostringstream out;
    out << "{\n  \"categories\": [";
    for (std::size_t c = 0; c < m.categories.size(); ++c)
        out << (c ? ", " : "") << quote(m.categories[c]);
    out << "],\n  \"reference\": " << quote(m.categories[0]);
    out << ",\n  \"predictors\": [";
    for (std::size_t i = 0; i < m.predictor_names.size(); ++i)
        out << (i ? ", " : "") << quote(m.predictor_names[i]);
    out << "],\n  \"coefficients\": [\n";
    for (Eigen::Index j = 0; j < m.coefficients.rows(); ++j) {
        out << "    [";
        for (Eigen::Index a = 0; a < m.coefficients.cols(); ++a)
            out << (a ? ", " : "") << format_double(m.coefficients(j, a));
        out << (j + 1 < m.coefficients.rows() ? "],\n" : "]\n");
    }
    out << "  ]\n}\n";
    return out.str();
}

MultinomialModel deserialize(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model JSON parse error: ") + e.what());
    }
    MultinomialModel m;
    try {
        m.categories = doc.at("categories").get<std::vector<std::string>>();
        m.predictor_names = doc.at("predictors").get<std::vector<std::string>>();
        const auto& coef = doc.at("coefficients");
        if (!coef.is_array() || coef.empty())
            throw DataError("model JSON: coefficients must be a non-empty array of rows");
        const std::size_t rows = coef.size();
        const std::size_t cols = coef.at(0).size();
        m.coefficients.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::size_t j = 0; j < rows; ++j) {
            const auto& row = coef.at(j);
            if (!row.is_array() || row.size() != cols)
                throw DataError("model JSON: coefficient row " + std::to_string(j) +
                                " has wrong length");
            for (std::size_t a = 0; a < cols; ++a)
                m.coefficients(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a)) =
                    row.at(a).get<double>();
        }
        if (doc.contains("reference") &&
            doc.at("reference").get<std::string>() != m.categories.at(0))
            throw DataError("model JSON: reference does not match first category");
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model JSON schema violation: ") + e.what());
    }
    m.validate();
    return m;
}

MultinomialModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

void save_model(const MultinomialModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file: " + path);
    out << serialize(m);
}

std::vector<int> outcomes_in_model_order(const MultinomialModel& m, const Dataset& d) {
    std::vector<int> remap(d.n_categories(), -1);
    for (std::size_t c = 0; c < d.n_categories(); ++c) {
        const auto it = std::find(m.categories.begin(), m.categories.end(), d.categories[c]);
        if (it == m.categories.end())
            throw DataError("outcome label '" + d.categories[c] +
                            "' is not among the model's categories");
        remap[c] = static_cast<int>(it - m.categories.begin());
    }
    std::vector<int> out(d.n_rows());
    for (std::size_t i = 0; i < d.n_rows(); ++i)
        out[i] = remap[static_cast<std::size_t>(d.outcome[i])];
    return out;
}

std::string prediction_csv(const MultinomialModel& m, const Dataset& d) {
    const Eigen::MatrixXd probs = probability_matrix(m, d);
    std::ostringstream out;
    for (std::size_t c = 0; c < m.categories.size(); ++c) {
        const bool quote = m.categories[c].find_first_of(",\"\n\r") != std::string::npos;
        if (c) out << ',';
        if (quote) {
            out << '"';
            for (char ch : m.categories[c]) out << (ch == '"' ? "\"\"" : std::string(1, ch));
            out << '"';
        } else {
            out << m.categories[c];
        }
    }
    out << '\n';
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        for (Eigen::Index c = 0; c < probs.cols(); ++c)
            out << (c ? "," : "") << format_double(probs(i, c));
        out << '\n';
    }
    return out.str();
}

} // namespace mpm
