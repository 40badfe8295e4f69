// mpmkit: command-line front end for developing, evaluating, validating,
// updating and sample-sizing multinomial risk prediction models.

#include "mpm/dataset.hpp"
#include "mpm/errors.hpp"
#include "mpm/fit.hpp"
#include "mpm/kernels.hpp"
#include "mpm/metrics.hpp"
#include "mpm/model.hpp"
#include "mpm/numeric.hpp"
#include "mpm/samplesize.hpp"
#include "mpm/validate.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct OutputDir {
    fs::path dir;
    bool force = false;

    void write(const std::string& filename, const std::string& content) const {
        fs::create_directories(dir);
        const fs::path target = dir / filename;
        if (fs::exists(target) && !force)
            throw mpm::DataError("output file already exists: " + target.string() +
                                 " (use --force to overwrite)");
        std::ofstream out(target, std::ios::binary);
        if (!out) throw mpm::DataError("cannot write " + target.string());
        out << content;
        std::cout << "wrote " << target.string() << "\n";
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mpm::DataError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string with_ci(double v, const mpm::Interval& ci, int digits = 3) {
    if (!ci.valid()) return fixed(v, digits);
    return fixed(v, digits) + " [" + fixed(ci.low, digits) + ", " + fixed(ci.high, digits) + "]";
}

ordered_json interval_json(const mpm::Interval& ci) {
    if (!ci.valid()) return nullptr;
    return ordered_json::array({ci.low, ci.high});
}

ordered_json calibration_json(const mpm::CalibrationReport& r) {
    ordered_json j;
    j["categories"] = r.categories;
    j["oe"] = ordered_json::array();
    for (const auto& oe : r.oe) {
        ordered_json o;
        o["category"] = oe.category;
        o["observed"] = oe.observed;
        o["expected"] = oe.expected;
        o["ratio"] = oe.ratio;
        o["ci"] = interval_json(oe.ci);
        o["mean_predicted"] = oe.mean_predicted;
        o["prevalence"] = oe.prevalence;
        j["oe"].push_back(o);
    }
    ordered_json weak;
    weak["intercepts"] = ordered_json::array();
    weak["intercept_ci"] = ordered_json::array();
    for (Eigen::Index i = 0; i < r.weak.intercepts.size(); ++i) {
        weak["intercepts"].push_back(r.weak.intercepts[i]);
        weak["intercept_ci"].push_back(interval_json(r.weak.intercept_ci[static_cast<std::size_t>(i)]));
    }
    weak["slope_matrix"] = ordered_json::array();
    weak["slope_ci"] = ordered_json::array();
    for (Eigen::Index a = 0; a < r.weak.slope_matrix.rows(); ++a) {
        ordered_json row = ordered_json::array();
        ordered_json ci_row = ordered_json::array();
        for (Eigen::Index b = 0; b < r.weak.slope_matrix.cols(); ++b) {
            row.push_back(r.weak.slope_matrix(a, b));
            ci_row.push_back(interval_json(
                r.weak.slope_ci[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]));
        }
        weak["slope_matrix"].push_back(row);
        weak["slope_ci"].push_back(ci_row);
    }
    ordered_json diag = ordered_json::array();
    for (Eigen::Index a = 0; a < r.weak.slope_matrix.rows(); ++a)
        diag.push_back(r.weak.slope_matrix(a, a));
    weak["c_slopes"] = diag;
    j["weak"] = weak;

    j["weak_binary"] = ordered_json::array();
    for (const auto& wb : r.weak_binary) {
        ordered_json o;
        o["category"] = wb.category;
        o["intercept"] = wb.intercept;
        o["intercept_ci"] = interval_json(wb.intercept_ci);
        o["slope"] = wb.slope;
        o["slope_ci"] = interval_json(wb.slope_ci);
        j["weak_binary"].push_back(o);
    }
    j["curves"] = {{"linear_fallback", r.curves.linear_fallback},
                   {"degenerate", r.curves.degenerate}};
    return j;
}

ordered_json discrimination_json(const mpm::DiscriminationReport& r) {
    ordered_json j;
    j["pdi"] = r.pdi;
    j["pdi_lower_limit"] = r.pdi_lower_limit;
    j["pdi_ci"] = interval_json(r.pdi_ci);
    j["pairwise"] = ordered_json::array();
    for (const auto& pc : r.pairwise) {
        ordered_json o;
        o["pair"] = pc.label;
        o["cat_a"] = pc.cat_a;
        o["cat_b"] = pc.cat_b;
        o["conditional_risk"] = pc.conditional;
        o["conditional_risk_ci"] = interval_json(pc.conditional_ci);
        if (pc.submodel) {
            o["submodel"] = *pc.submodel;
            o["submodel_ci"] = interval_json(pc.submodel_ci);
        }
        j["pairwise"].push_back(o);
    }
    return j;
}

ordered_json casemix_json(const mpm::CaseMixSummary& s) {
    ordered_json j;
    j["n"] = s.n;
    j["predictors"] = ordered_json::array();
    for (const auto& p : s.predictors)
        j["predictors"].push_back({{"name", p.name},
                                   {"median", p.median},
                                   {"q25", p.q25},
                                   {"q75", p.q75},
                                   {"mean", p.mean},
                                   {"sd", p.sd}});
    j["categories"] = ordered_json::array();
    for (const auto& c : s.categories)
        j["categories"].push_back(
            {{"label", c.label}, {"count", c.count}, {"prevalence", c.prevalence}});
    return j;
}

mpm::CaseMixSummary casemix_from_json(const std::string& textic) {
    ordered_json j;
    try {
        j = ordered_json::parse(textic);
    } catch (const nlohmann::json::exception& e) {
        throw mpm::DataError(std::string("case-mix summary JSON parse error: ") + e.what());
    }
    mpm::CaseMixSummary s;
    try {
        s.n = j.at("n").get<std::size_t>();
        for (const auto& p : j.at("predictors"))
            s.predictors.push_back({p.at("name").get<std::string>(),
                                    p.at("median").get<double>(), p.at("q25").get<double>(),
                                    p.at("q75").get<double>(), p.at("mean").get<double>(),
                                    p.at("sd").get<double>()});
        for (const auto& c : j.at("categories"))
            s.categories.push_back({c.at("label").get<std::string>(),
                                    c.at("count").get<std::size_t>(),
                                    c.at("prevalence").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        throw mpm::DataError(std::string("case-mix summary JSON schema violation: ") + e.what());
    }
    return s;
}

ordered_json comparison_json(const mpm::CaseMixComparison& c) {
    ordered_json j;
    j["predictor_medians"] = ordered_json::array();
    for (const auto& r : c.predictor_medians)
        j["predictor_medians"].push_back({{"name", r.name},
                                          {"development", r.dev_value},
                                          {"validation", r.val_value},
                                          {"difference", r.difference}});
    j["predictor_means"] = ordered_json::array();
    for (const auto& r : c.predictor_means)
        j["predictor_means"].push_back({{"name", r.name},
                                        {"development", r.dev_value},
                                        {"validation", r.val_value},
                                        {"difference", r.difference}});
    j["categories"] = ordered_json::array();
    for (const auto& r : c.categories)
        j["categories"].push_back({{"label", r.label},
                                   {"development_prevalence", r.dev_prevalence},
                                   {"validation_prevalence", r.val_prevalence},
                                   {"ratio", r.ratio}});
    return j;
}

std::string calibration_text(const mpm::CalibrationReport& r) {
    std::ostringstream out;
    out << "Mean calibration (O/E per category)\n";
    for (const auto& oe : r.oe)
        out << "  " << oe.category << ": O/E = " << with_ci(oe.ratio, oe.ci)
            << "  (observed " << fixed(oe.observed, 0) << ", expected " << fixed(oe.expected, 2)
            << "; mean predicted " << fixed(oe.mean_predicted, 4) << ", prevalence "
            << fixed(oe.prevalence, 4) << ")\n";
    out << "Weak calibration (multinomial framework)\n";
    for (Eigen::Index j = 0; j < r.weak.intercepts.size(); ++j) {
        out << "  submodel " << j + 1 << ": c-intercept = "
            << with_ci(r.weak.intercepts[j], r.weak.intercept_ci[static_cast<std::size_t>(j)])
            << ", c-slope = "
            << with_ci(r.weak.slope_matrix(j, j),
                       r.weak.slope_ci[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)])
            << "\n";
    }
    out << "  slope matrix:\n";
    for (Eigen::Index a = 0; a < r.weak.slope_matrix.rows(); ++a) {
        out << "    ";
        for (Eigen::Index b = 0; b < r.weak.slope_matrix.cols(); ++b)
            out << fixed(r.weak.slope_matrix(a, b)) << (b + 1 < r.weak.slope_matrix.cols() ? "  " : "");
        out << "\n";
    }
    out << "Weak calibration (per-category binary approximation)\n";
    for (const auto& wb : r.weak_binary)
        out << "  " << wb.category << ": c-intercept = " << with_ci(wb.intercept, wb.intercept_ci)
            << ", c-slope = " << with_ci(wb.slope, wb.slope_ci) << "\n";
    out << "Moderate calibration: "
        << (r.curves.degenerate
                ? "constant predictions; curve collapsed to one point per category"
                : (r.curves.linear_fallback ? "spline smoother fell back to linear recalibration"
                                            : "spline-smoothed curves"))
        << " (points in curves.csv)\n";
    return out.str();
}

std::string discrimination_text(const mpm::DiscriminationReport& r) {
    std::ostringstream out;
    out << "Discrimination\n";
    out << "  PDI = " << with_ci(r.pdi, r.pdi_ci) << " (lower limit "
        << fixed(r.pdi_lower_limit, 2) << ")\n";
    for (const auto& pc : r.pairwise) {
        out << "  c(" << pc.label << "): conditional-risk = "
            << with_ci(pc.conditional, pc.conditional_ci);
        if (pc.submodel) out << ", submodel = " << with_ci(*pc.submodel, pc.submodel_ci);
        out << "\n";
    }
    return out.str();
}

std::string comparison_text(const mpm::CaseMixComparison& c) {
    std::ostringstream out;
    out << "Case-mix comparison (development vs validation)\n";
    out << "  predictor medians:\n";
    for (const auto& r : c.predictor_medians)
        out << "    " << r.name << ": " << fixed(r.dev_value, 2) << " vs "
            << fixed(r.val_value, 2) << " (difference " << (r.difference >= 0 ? "+" : "")
            << fixed(r.difference, 2) << ")\n";
    out << "  outcome prevalences:\n";
    for (const auto& r : c.categories)
        out << "    " << r.label << ": " << fixed(100.0 * r.dev_prevalence, 1) << "% vs "
            << fixed(100.0 * r.val_prevalence, 1) << "% (ratio " << fixed(r.ratio, 2) << ")\n";
    return out.str();
}

// --------------------------- subcommand payloads ---------------------------

struct CommonEval {
    int bootstrap_B = 200;
    std::uint64_t seed = 0;
};

int cmd_fit(const std::string& csv, const std::string& outcome, const std::string& reference,
            bool transform, const OutputDir& out) {
    const mpm::Dataset d = mpm::load_csv(csv, outcome, reference);
    const mpm::FitResult res = mpm::fit(d);

    out.write("model.json", mpm::serialize(res.model));

    ordered_json j;
    j["n"] = d.n_rows();
    j["categories"] = d.categories;
    j["predictors"] = d.predictor_names;
    j["log_likelihood"] = res.log_likelihood;
    j["aic"] = res.aic;
    j["iterations"] = res.iterations;
    j["converged"] = res.converged;
    j["coefficients"] = ordered_json::array();
    for (Eigen::Index r = 0; r < res.model.coefficients.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < res.model.coefficients.cols(); ++c)
            row.push_back(res.model.coefficients(r, c));
        j["coefficients"].push_back(row);
    }
    j["standard_errors"] = ordered_json::array();
    for (Eigen::Index r = 0; r < res.standard_errors.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < res.standard_errors.cols(); ++c)
            row.push_back(res.standard_errors(r, c));
        j["standard_errors"].push_back(row);
    }

    std::ostringstream txt;
    txt << "Multinomial model fit\n";
    txt << "  n = " << d.n_rows() << ", categories (reference first): ";
    for (std::size_t c = 0; c < d.categories.size(); ++c)
        txt << (c ? ", " : "") << d.categories[c];
    txt << "\n  log-likelihood = " << fixed(res.log_likelihood, 6) << ", AIC = "
        << fixed(res.aic, 6) << ", iterations = " << res.iterations << "\n";
    txt << "  coefficients (SE):\n";
    for (Eigen::Index r = 0; r < res.model.coefficients.rows(); ++r) {
        txt << "    " << d.categories[static_cast<std::size_t>(r) + 1] << " vs "
            << d.categories[0] << ": intercept " << fixed(res.model.coefficients(r, 0))
            << " (" << fixed(res.standard_errors(r, 0)) << ")";
        for (std::size_t p = 0; p < d.n_predictors(); ++p)
            txt << ", " << d.predictor_names[p] << " "
                << fixed(res.model.coefficients(r, static_cast<Eigen::Index>(p + 1))) << " ("
                << fixed(res.standard_errors(r, static_cast<Eigen::Index>(p + 1))) << ")";
        txt << "\n";
    }

    if (transform) {
        j["transform_search"] = ordered_json::array();
        txt << "Transformation search (per predictor, sole-predictor fits)\n";
        for (const auto& name : d.predictor_names) {
            const mpm::TransformSearchResult ts = mpm::transform_search(d, name);
            ordered_json tj;
            tj["predictor"] = name;
            tj["candidates"] = ordered_json::array();
            for (const auto& cand : ts.candidates) {
                ordered_json cj;
                cj["formulation"] = cand.label;
                if (cand.available) cj["aic"] = cand.aic;
                if (cand.skipped) cj["skipped"] = true;
                if (!cand.note.empty()) cj["note"] = cand.note;
                tj["candidates"].push_back(cj);
            }
            tj["selected"] = ts.candidates[ts.selected_index].label;
            j["transform_search"].push_back(tj);
            txt << "  " << name << ":";
            for (const auto& cand : ts.candidates) {
                txt << "  {" << cand.label << "} ";
                if (cand.available) txt << "AIC=" << fixed(cand.aic, 2);
                else if (cand.skipped) txt << "skipped";
                else txt << "failed";
            }
            txt << "  -> selected {" << ts.candidates[ts.selected_index].label << "}\n";
        }
    }

    out.write("fit_report.json", j.dump(2) + "\n");
    out.write("fit_report.txt", txt.str());
    out.write("casemix_summary.json", casemix_json(mpm::describe(d)).dump(2) + "\n");
    std::cout << txt.str();
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& csv, const OutputDir& out) {
    const mpm::MultinomialModel m = mpm::load_model(model_path);
    // outcome column content is irrelevant for predicting; reuse the loader by
    // accepting any outcome column name present in the file
    const std::string text = read_file(csv);
    const auto table = mpm::parse_csv_table(text);
    if (table.empty()) throw mpm::DataError("prediction CSV has no header");
    // pick an outcome column: a header not among the model predictors, else error
    std::string outcome_col;
    for (const auto& h : table.front()) {
        if (std::find(m.predictor_names.begin(), m.predictor_names.end(), h) ==
            m.predictor_names.end()) {
            outcome_col = h;
            break;
        }
    }
    mpm::Dataset d;
    if (outcome_col.empty()) {
        // no outcome column in the file: parse predictors only
        throw mpm::DataError("prediction CSV needs at least one non-predictor column "
                             "(an outcome or id column)");
    }
    const auto first_label = [&]() -> std::string {
        const std::size_t idx = static_cast<std::size_t>(
            std::find(table.front().begin(), table.front().end(), outcome_col) -
            table.front().begin());
        if (table.size() < 2) throw mpm::DataError("prediction CSV has no data rows");
        return table[1][idx];
    }();
    d = mpm::parse_csv(text, outcome_col, first_label);
    out.write("predictions.csv", mpm::prediction_csv(m, d));
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& csv, const CommonEval& ev,
                 const OutputDir& out) {
    const mpm::MultinomialModel m = mpm::load_model(model_path);
    // reference taken from the model; the outcome column must hold its labels
    std::cout << "seed: " << ev.seed << "\n";
    mpm::EvaluationOptions opts;
    opts.bootstrap_B = ev.bootstrap_B;
    opts.seed = ev.seed;

    // outcome column: any column that is not a model predictor
    const std::string text = read_file(csv);
    const auto table = mpm::parse_csv_table(text);
    if (table.empty()) throw mpm::DataError("CSV has no header");
    std::string outcome_col;
    for (const auto& h : table.front())
        if (std::find(m.predictor_names.begin(), m.predictor_names.end(), h) ==
            m.predictor_names.end()) {
            outcome_col = h;
            break;
        }
    if (outcome_col.empty())
        throw mpm::DataError("no outcome column found (every column is a model predictor)");
    const mpm::Dataset d = mpm::parse_csv(text, outcome_col, m.categories[0]);

    const mpm::CalibrationReport cal = mpm::calibration_report(m, d, opts);
    const mpm::DiscriminationReport dis = mpm::discrimination_report(m, d, opts);

    ordered_json j;
    j["seed"] = ev.seed;
    j["bootstrap_B"] = ev.bootstrap_B;
    j["calibration"] = calibration_json(cal);
    j["discrimination"] = discrimination_json(dis);
    out.write("evaluation.json", j.dump(2) + "\n");
    out.write("curves.csv", mpm::curves_to_csv(cal.categories, cal.curves));
    const std::string txt = calibration_text(cal) + discrimination_text(dis);
    out.write("evaluation.txt", txt);
    std::cout << txt;
    return 0;
}

int cmd_validate_internal(const std::string& csv, const std::string& outcome,
                          const std::string& reference, int B, std::uint64_t seed,
                          const OutputDir& out) {
    const mpm::Dataset d = mpm::load_csv(csv, outcome, reference);
    std::cout << "seed: " << seed << "\n";
    const mpm::InternalValidationResult res = mpm::internal_validate(d, B, seed);

    ordered_json j;
    j["B"] = res.B;
    j["seed"] = res.seed;
    j["used_replicates"] = res.used_replicates;
    j["failed_replicates"] = res.failed_replicates;
    auto metrics_json = [&](const mpm::ValidationMetrics& v) {
        ordered_json o;
        o["pdi"] = v.pdi;
        o["pairwise_c"] = ordered_json::array();
        for (std::size_t i = 0; i < v.pairwise_c.size(); ++i) {
            o["pairwise_c"].push_back(
                {{"pair", res.categories[res.pairs[i].first] + " vs " +
                              res.categories[res.pairs[i].second]},
                 {"value", v.pairwise_c[i]}});
        }
        o["c_slopes"] = v.c_slopes;
        return o;
    };
    j["apparent"] = metrics_json(res.apparent);
    j["mean_optimism"] = metrics_json(res.mean_optimism);
    j["optimism_adjusted"] = metrics_json(res.adjusted);
    out.write("internal_validation.json", j.dump(2) + "\n");

    std::ostringstream txt;
    txt << "Bootstrap internal validation (B = " << res.B << ", seed = " << res.seed << ")\n";
    txt << "  replicates used " << res.used_replicates << ", failed " << res.failed_replicates
        << "\n";
    txt << "  PDI: apparent " << fixed(res.apparent.pdi) << ", optimism "
        << fixed(res.mean_optimism.pdi) << ", adjusted " << fixed(res.adjusted.pdi) << "\n";
    for (std::size_t i = 0; i < res.pairs.size(); ++i)
        txt << "  c(" << res.categories[res.pairs[i].first] << " vs "
            << res.categories[res.pairs[i].second] << "): apparent "
            << fixed(res.apparent.pairwise_c[i]) << ", optimism "
            << fixed(res.mean_optimism.pairwise_c[i]) << ", adjusted "
            << fixed(res.adjusted.pairwise_c[i]) << "\n";
    for (std::size_t s = 0; s < res.apparent.c_slopes.size(); ++s)
        txt << "  c-slope submodel " << s + 1 << ": apparent " << fixed(res.apparent.c_slopes[s])
            << ", optimism " << fixed(res.mean_optimism.c_slopes[s]) << ", adjusted "
            << fixed(res.adjusted.c_slopes[s]) << "\n";
    out.write("internal_validation.txt", txt.str());
    std::cout << txt.str();
    return 0;
}

int cmd_validate_external(const std::string& model_path, const std::string& csv,
                          const std::string& dev_summary_path, const CommonEval& ev,
                          const OutputDir& out) {
    const mpm::MultinomialModel m = mpm::load_model(model_path);
    std::cout << "seed: " << ev.seed << "\n";
    const std::string text = read_file(csv);
    const auto table = mpm::parse_csv_table(text);
    if (table.empty()) throw mpm::DataError("CSV has no header");
    std::string outcome_col;
    for (const auto& h : table.front())
        if (std::find(m.predictor_names.begin(), m.predictor_names.end(), h) ==
            m.predictor_names.end()) {
            outcome_col = h;
            break;
        }
    if (outcome_col.empty())
        throw mpm::DataError("no outcome column found (every column is a model predictor)");
    const mpm::Dataset d = mpm::parse_csv(text, outcome_col, m.categories[0]);

    mpm::CaseMixSummary dev_summary;
    const bool have_dev = !dev_summary_path.empty();
    if (have_dev) dev_summary = casemix_from_json(read_file(dev_summary_path));

    mpm::EvaluationOptions opts;
    opts.bootstrap_B = ev.bootstrap_B;
    opts.seed = ev.seed;
    const mpm::ExternalValidationReport rep =
        mpm::external_validate(m, d, have_dev ? &dev_summary : nullptr, opts);

    ordered_json j;
    j["seed"] = ev.seed;
    j["bootstrap_B"] = ev.bootstrap_B;
    j["calibration"] = calibration_json(rep.calibration);
    j["discrimination"] = discrimination_json(rep.discrimination);
    j["validation_casemix"] = casemix_json(rep.validation_casemix);
    if (rep.casemix_comparison)
        j["casemix_comparison"] = comparison_json(*rep.casemix_comparison);
    out.write("external_validation.json", j.dump(2) + "\n");
    out.write("curves.csv", mpm::curves_to_csv(rep.calibration.categories, rep.calibration.curves));

    std::string txt = calibration_text(rep.calibration) + discrimination_text(rep.discrimination);
    if (rep.casemix_comparison) txt += comparison_text(*rep.casemix_comparison);
    out.write("external_validation.txt", txt);
    std::cout << txt;
    return 0;
}

int cmd_update(const std::string& model_path, const std::string& csv,
               const std::string& strategy, const CommonEval& ev, const OutputDir& out) {
    const mpm::MultinomialModel m = mpm::load_model(model_path);
    std::cout << "seed: " << ev.seed << "\n";
    const std::string text = read_file(csv);
    const auto table = mpm::parse_csv_table(text);
    if (table.empty()) throw mpm::DataError("CSV has no header");
    std::string outcome_col;
    for (const auto& h : table.front())
        if (std::find(m.predictor_names.begin(), m.predictor_names.end(), h) ==
            m.predictor_names.end()) {
            outcome_col = h;
            break;
        }
    if (outcome_col.empty())
        throw mpm::DataError("no outcome column found (every column is a model predictor)");
    const mpm::Dataset d = mpm::parse_csv(text, outcome_col, m.categories[0]);

    mpm::EvaluationOptions opts;
    opts.bootstrap_B = ev.bootstrap_B;
    opts.seed = ev.seed;

    mpm::UpdateResult res;
    if (strategy == "recalibrate") res = mpm::recalibrate(m, d, opts);
    else if (strategy == "refit") res = mpm::refit(m, d, opts);
    else throw mpm::DataError("unknown update strategy '" + strategy +
                              "' (expected recalibrate or refit)");

    mpm::ModelProvenance prov;
    prov.strategy = strategy;
    prov.source_model_hash = mpm::fnv1a64_hex(mpm::serialize(m));
    prov.dataset_fingerprint = mpm::fnv1a64_hex(mpm::to_csv(d));
    out.write("updated_model.json", mpm::serialize(res.updated, prov));

    ordered_json j;
    j["strategy"] = strategy;
    j["seed"] = ev.seed;
    if (res.strategy == mpm::UpdateStrategy::recalibration) {
        j["alpha"] = ordered_json::array();
        for (Eigen::Index r = 0; r < res.alpha.rows(); ++r) {
            ordered_json row = ordered_json::array();
            for (Eigen::Index c = 0; c < res.alpha.cols(); ++c) row.push_back(res.alpha(r, c));
            j["alpha"].push_back(row);
        }
    }
    j["provenance"] = {{"strategy", prov.strategy},
                       {"source_model_hash", prov.source_model_hash},
                       {"dataset_fingerprint", prov.dataset_fingerprint}};
    j["before"] = {{"calibration", calibration_json(res.pre.calibration)},
                   {"discrimination", discrimination_json(res.pre.discrimination)}};
    j["after"] = {{"calibration", calibration_json(res.post.calibration)},
                  {"discrimination", discrimination_json(res.post.discrimination)}};
    out.write("update_report.json", j.dump(2) + "\n");

    std::ostringstream txt;
    txt << "Model update (" << strategy << ")\n";
    if (res.strategy == mpm::UpdateStrategy::recalibration) {
        txt << "  alpha (intercept, then LP coefficients per equation):\n";
        for (Eigen::Index r = 0; r < res.alpha.rows(); ++r) {
            txt << "    equation " << r + 1 << ":";
            for (Eigen::Index c = 0; c < res.alpha.cols(); ++c)
                txt << " " << fixed(res.alpha(r, c));
            txt << "\n";
        }
    }
    txt << "-- before --\n"
        << calibration_text(res.pre.calibration) << discrimination_text(res.pre.discrimination);
    txt << "-- after --\n"
        << calibration_text(res.post.calibration) << discrimination_text(res.post.discrimination);
    out.write("update_report.txt", txt.str());
    std::cout << txt.str();
    return 0;
}

int cmd_samplesize_dev(const mpm::DevSampleSizeInput& in, const OutputDir& out, bool have_out) {
    const mpm::DevSampleSizeResult r = mpm::dev_sample_size(in);

    std::ostringstream txt;
    txt << "Development sample size (multinomial model)\n";
    txt << "Step 1: number of candidate predictor parameters Q = " << in.q_parameters << "\n";
    txt << "Step 2: prevalences and Cox-Snell R2\n";
    txt << "  n = " << fixed(r.n_total, 0) << "\n";
    for (std::size_t c = 0; c < r.prevalences.size(); ++c)
        txt << "  p_" << c + 1 << " = " << fixed(in.events[c], 0) << " / " << fixed(r.n_total, 0)
            << " = " << fixed(r.prevalences[c], 5) << "\n";
    txt << "  max R2_cs = " << fixed(r.max_r2cs, 5) << "\n";
    txt << "  R2_cs_adj = " << fixed(in.r2_fraction, 2) << " * " << fixed(r.max_r2cs, 5)
        << " = " << fixed(r.r2cs_adj, 5) << "\n";
    txt << "Step 3 (criterion 1, shrinkage target S = " << fixed(in.shrinkage, 2) << ")\n";
    for (const auto& pr : r.pairs)
        txt << "  pair (" << pr.cat_a + 1 << "," << pr.cat_b + 1 << "): phi = "
            << fixed(pr.phi, 5) << ", p_pair = " << fixed(pr.p_pair, 5) << ", R2_adj = "
            << fixed(pr.r2_adj_pair, 5) << ", m = " << fixed(pr.m, 2) << ", n = "
            << fixed(pr.n, 2) << "\n";
    txt << "  criterion 1 n = " << r.criterion1 << "\n";
    txt << "Step 4 (criterion 2): NC2 = " << fixed(r.criterion2_raw, 2) << " -> n = "
        << r.criterion2 << "\n";
    txt << "Step 5 (criterion 3): NC3 = (";
    for (std::size_t c = 0; c < r.criterion3_raw.size(); ++c)
        txt << (c ? ", " : "") << fixed(r.criterion3_raw[c], 2);
    txt << ") -> n = " << r.criterion3 << "\n";
    txt << "Step 6: final n = " << r.final_n << " (criterion " << r.driving_criterion << ")\n";

    ordered_json j;
    j["input"] = {{"q", in.q_parameters},          {"events", in.events},
                  {"shrinkage", in.shrinkage},     {"r2_fraction", in.r2_fraction},
                  {"delta", in.delta},             {"chisq_divisor", in.chisq_divisor}};
    j["n_total"] = r.n_total;
    j["prevalences"] = r.prevalences;
    j["max_r2cs"] = r.max_r2cs;
    j["r2cs_adj"] = r.r2cs_adj;
    j["pairs"] = ordered_json::array();
    for (const auto& pr : r.pairs)
        j["pairs"].push_back({{"pair", {pr.cat_a + 1, pr.cat_b + 1}},
                              {"phi", pr.phi},
                              {"p_pair", pr.p_pair},
                              {"r2_adj", pr.r2_adj_pair},
                              {"m", pr.m},
                              {"n", pr.n}});
    j["criterion1"] = r.criterion1;
    j["criterion2_raw"] = r.criterion2_raw;
    j["criterion2"] = r.criterion2;
    j["criterion3_raw"] = r.criterion3_raw;
    j["criterion3"] = r.criterion3;
    j["final_n"] = r.final_n;
    j["driving_criterion"] = r.driving_criterion;

    std::cout << txt.str();
    if (have_out) {
        out.write("samplesize_dev.txt", txt.str());
        out.write("samplesize_dev.json", j.dump(2) + "\n");
    }
    return 0;
}

int cmd_samplesize_val(const std::vector<mpm::ExtSubmodelInput>& submodels,
                       const OutputDir& out, bool have_out) {
    const mpm::ExtSampleSizeResult r = mpm::ext_sample_size(submodels);

    std::ostringstream txt;
    txt << "External validation sample size\n";
    for (const auto& s : r.submodels) {
        txt << s.label << ":\n";
        txt << "  O/E: n = " << s.n_oe << " (raw " << fixed(s.n_oe_raw, 2) << ")\n";
        txt << "  calibration slope: n = " << s.n_slope << " (raw " << fixed(s.n_slope_raw, 2)
            << ", Gauss-Hermite " << r.quadrature_nodes << " nodes)\n";
        txt << "  c-statistic: n = " << s.n_c << " (raw " << fixed(s.n_c_raw, 2) << ")\n";
        txt << "  submodel minimum n = " << s.submodel_max << " (driven by " << s.driving
            << ")\n";
    }
    txt << "overall minimum n = " << r.overall << " (driven by " << r.driving << ")\n";

    ordered_json j;
    j["submodels"] = ordered_json::array();
    for (const auto& s : r.submodels)
        j["submodels"].push_back({{"label", s.label},
                                  {"n_oe", s.n_oe},
                                  {"n_oe_raw", s.n_oe_raw},
                                  {"n_slope", s.n_slope},
                                  {"n_slope_raw", s.n_slope_raw},
                                  {"n_c", s.n_c},
                                  {"n_c_raw", s.n_c_raw},
                                  {"submodel_max", s.submodel_max},
                                  {"driving", s.driving}});
    j["overall"] = r.overall;
    j["driving"] = r.driving;
    j["quadrature_nodes"] = r.quadrature_nodes;

    std::cout << txt.str();
    if (have_out) {
        out.write("samplesize_val.txt", txt.str());
        out.write("samplesize_val.json", j.dump(2) + "\n");
    }
    return 0;
}

int cmd_plot(const std::string& curves_csv, const OutputDir& out) {
    const auto table = mpm::parse_csv_table(read_file(curves_csv));
    if (table.empty() || table.front().size() != 3 || table.front()[0] != "category")
        throw mpm::DataError("curve CSV must have header category,predicted,observed_smoothed");

    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> curves;
    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& row = table[r];
        if (row.size() != 3)
            throw mpm::DataError("curve CSV row " + std::to_string(r + 1) + " malformed");
        const std::string& cat = row[0];
        if (!curves.count(cat)) order.push_back(cat);
        curves[cat].emplace_back(std::stod(row[1]), std::stod(row[2]));
    }
    if (order.empty()) throw mpm::DataError("curve CSV has no data rows");

    const double size = 520.0;
    const double margin = 60.0;
    auto sx = [&](double v) { return margin + v * size; };
    auto sy = [&](double v) { return margin + (1.0 - v) * size; };

    static const char* palette[] = {"#1b6ca8", "#c0392b", "#1e8449",
                                    "#8e44ad", "#d68910", "#148f77"};
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin
        << "\" height=\"" << size + 2 * margin << "\" viewBox=\"0 0 " << size + 2 * margin
        << " " << size + 2 * margin << "\">\n";
    svg << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes
    svg << "  <line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(1) << "\" y2=\""
        << sy(0) << "\" stroke=\"black\"/>\n";
    svg << "  <line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(0) << "\" y2=\""
        << sy(1) << "\" stroke=\"black\"/>\n";
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        svg << "  <text x=\"" << sx(t) << "\" y=\"" << sy(0) + 20
            << "\" font-size=\"12\" text-anchor=\"middle\">" << fixed(t, 2) << "</text>\n";
        svg << "  <text x=\"" << sx(0) - 10 << "\" y=\"" << sy(t) + 4
            << "\" font-size=\"12\" text-anchor=\"end\">" << fixed(t, 2) << "</text>\n";
    }
    svg << "  <text x=\"" << sx(0.5) << "\" y=\"" << sy(0) + 40
        << "\" font-size=\"13\" text-anchor=\"middle\">predicted risk</text>\n";
    svg << "  <text x=\"" << sx(0) - 45 << "\" y=\"" << sy(0.5)
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 " << sx(0) - 45
        << " " << sy(0.5) << ")\">observed proportion</text>\n";
    // 45-degree reference
    svg << "  <path class=\"diagonal\" d=\"M " << sx(0) << " " << sy(0) << " L " << sx(1) << " "
        << sy(1) << "\" stroke=\"#888\" stroke-dasharray=\"6,4\" fill=\"none\"/>\n";

    std::size_t ci = 0;
    for (const auto& cat : order) {
        auto pts = curves[cat];
        std::sort(pts.begin(), pts.end());
        const char* color = palette[ci % 6];
        svg << "  <g id=\"curve-" << cat << "\">\n    <path d=\"";
        for (std::size_t i = 0; i < pts.size(); ++i)
            svg << (i ? " L " : "M ") << fixed(sx(pts[i].first), 2) << " "
                << fixed(sy(pts[i].second), 2);
        svg << "\" stroke=\"" << color << "\" fill=\"none\" stroke-width=\"1.8\"/>\n";
        svg << "    <text x=\"" << sx(0.02) << "\" y=\"" << sy(0.98) + 16.0 * ci
            << "\" font-size=\"13\" fill=\"" << color << "\">" << cat << "</text>\n  </g>\n";
        ++ci;
    }
    svg << "</svg>\n";
    out.write("calibration.svg", svg.str());
    return 0;
}

mpm::ExtSubmodelInput parse_submodel_flag(const std::string& text) {
    mpm::ExtSubmodelInput in;
    std::istringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw mpm::DataError("--submodel expects key=value pairs; got '" + tok + "'");
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "label") in.label = val;
        else if (key == "phi") in.prevalence = std::stod(val);
        else if (key == "se-oe") in.se_oe = std::stod(val);
        else if (key == "lp-mean") in.lp_mean = std::stod(val);
        else if (key == "lp-sd") in.lp_sd = std::stod(val);
        else if (key == "se-slope") in.se_slope = std::stod(val);
        else if (key == "c") in.c_statistic = std::stod(val);
        else if (key == "se-c") in.se_c = std::stod(val);
        else throw mpm::DataError("--submodel: unknown key '" + key + "'");
    }
    if (in.label.empty())
        in.label = "Submodel";
    return in;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mpmkit: multinomial prediction model toolkit"};
    app.require_subcommand(1);
    app.footer("Environment: MPMKIT_THREADS caps bootstrap parallelism (default 1); "
               "MPMKIT_SIMD=scalar|avx2|auto selects the kernel set.");

    std::string csv, model_path, outcome, reference, out_dir, dev_summary, strategy,
        curves_path, json_input;
    bool force = false;
    bool transform = false;
    int B = 200;
    std::uint64_t seed = 0;

    auto add_out = [&](CLI::App* cmd, bool required = true) {
        auto* opt = cmd->add_option("--out", out_dir, "output directory");
        if (required) opt->required();
        cmd->add_flag("--force", force, "overwrite existing outputs");
    };

    auto* fit_cmd = app.add_subcommand("fit", "fit a multinomial model by maximum likelihood");
    fit_cmd->add_option("csv", csv, "training data CSV")->required();
    fit_cmd->add_option("--outcome", outcome, "outcome column name")->required();
    fit_cmd->add_option("--reference", reference, "reference outcome category")->required();
    fit_cmd->add_flag("--transform-search", transform,
                      "run the power-transformation search per predictor");
    add_out(fit_cmd);

    auto* predict_cmd = app.add_subcommand("predict", "write per-subject predicted probabilities");
    predict_cmd->add_option("model", model_path, "model JSON")->required();
    predict_cmd->add_option("csv", csv, "data CSV")->required();
    add_out(predict_cmd);

    auto* eval_cmd = app.add_subcommand("evaluate", "calibration and discrimination on a dataset");
    eval_cmd->add_option("model", model_path, "model JSON")->required();
    eval_cmd->add_option("csv", csv, "evaluation data CSV")->required();
    eval_cmd->add_option("--B", B, "bootstrap replicates for metric CIs (default 200)");
    eval_cmd->add_option("--seed", seed, "bootstrap seed (default 0)");
    add_out(eval_cmd);

    auto* vint_cmd = app.add_subcommand("validate-internal", "bootstrap optimism correction");
    vint_cmd->add_option("csv", csv, "development data CSV")->required();
    vint_cmd->add_option("--outcome", outcome, "outcome column name")->required();
    vint_cmd->add_option("--reference", reference, "reference outcome category")->required();
    vint_cmd->add_option("--B", B, "bootstrap replicates (default 200)");
    vint_cmd->add_option("--seed", seed, "bootstrap seed (default 0)");
    add_out(vint_cmd);

    auto* vext_cmd = app.add_subcommand("validate-external",
                                        "external validation with frozen coefficients");
    vext_cmd->add_option("model", model_path, "model JSON")->required();
    vext_cmd->add_option("csv", csv, "validation data CSV")->required();
    vext_cmd->add_option("--dev-summary", dev_summary,
                         "case-mix summary JSON from the development data");
    vext_cmd->add_option("--B", B, "bootstrap replicates for metric CIs (default 200)");
    vext_cmd->add_option("--seed", seed, "bootstrap seed (default 0)");
    add_out(vext_cmd);

    auto* update_cmd = app.add_subcommand("update", "recalibrate or refit on new data");
    update_cmd->add_option("model", model_path, "model JSON")->required();
    update_cmd->add_option("csv", csv, "update data CSV")->required();
    update_cmd->add_option("--strategy", strategy, "recalibrate | refit")->required();
    update_cmd->add_option("--B", B, "bootstrap replicates for metric CIs (default 200)");
    update_cmd->add_option("--seed", seed, "bootstrap seed (default 0)");
    add_out(update_cmd);

    auto* ss_cmd = app.add_subcommand("samplesize", "sample size calculations");
    ss_cmd->require_subcommand(1);

    mpm::DevSampleSizeInput dev_in;
    std::vector<double> events;
    auto* ss_dev = ss_cmd->add_subcommand("dev", "development sample size (3 criteria)");
    ss_dev->add_option("--q", dev_in.q_parameters, "candidate predictor parameters Q");
    ss_dev->add_option("--events", events, "event counts per category, e.g. 756 730 146");
    ss_dev->add_option("--shrinkage", dev_in.shrinkage, "target shrinkage S (default 0.9)");
    ss_dev->add_option("--r2-fraction", dev_in.r2_fraction,
                       "anticipated fraction of max Cox-Snell R2 (default 0.15)");
    ss_dev->add_option("--delta", dev_in.delta, "intercept precision margin (default 0.05)");
    ss_dev->add_option("--chisq-divisor", dev_in.chisq_divisor,
                       "alpha divisor in the criterion-3 quantile (default 5)");
    ss_dev->add_option("--json", json_input, "JSON input file instead of flags");
    add_out(ss_dev, false);

    std::vector<std::string> submodel_flags;
    auto* ss_val = ss_cmd->add_subcommand("val", "external validation sample size");
    ss_val->add_option("--submodel", submodel_flags,
                       "submodel spec: label=...,phi=...,se-oe=...,lp-mean=...,lp-sd=...,"
                       "se-slope=...,c=...,se-c=... (repeatable)");
    ss_val->add_option("--json", json_input, "JSON input file instead of flags");
    add_out(ss_val, false);

    auto* plot_cmd = app.add_subcommand("plot-data", "render curve points as an SVG plot");
    plot_cmd->add_option("curves", curves_path, "curves.csv from evaluate")->required();
    add_out(plot_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    OutputDir out{out_dir, force};
    try {
        if (app.got_subcommand(fit_cmd))
            return cmd_fit(csv, outcome, reference, transform, out);
        if (app.got_subcommand(predict_cmd)) return cmd_predict(model_path, csv, out);
        if (app.got_subcommand(eval_cmd))
            return cmd_evaluate(model_path, csv, {B, seed}, out);
        if (app.got_subcommand(vint_cmd))
            return cmd_validate_internal(csv, outcome, reference, B, seed, out);
        if (app.got_subcommand(vext_cmd))
            return cmd_validate_external(model_path, csv, dev_summary, {B, seed}, out);
        if (app.got_subcommand(update_cmd))
            return cmd_update(model_path, csv, strategy, {B, seed}, out);
        if (app.got_subcommand(plot_cmd)) return cmd_plot(curves_path, out);
        if (ss_cmd->got_subcommand(ss_dev)) {
            if (!json_input.empty()) {
                const auto j = ordered_json::parse(read_file(json_input));
                dev_in.q_parameters = j.at("q").get<int>();
                dev_in.events = j.at("events").get<std::vector<double>>();
                if (j.contains("shrinkage")) dev_in.shrinkage = j["shrinkage"].get<double>();
                if (j.contains("r2_fraction"))
                    dev_in.r2_fraction = j["r2_fraction"].get<double>();
                if (j.contains("delta")) dev_in.delta = j["delta"].get<double>();
                if (j.contains("chisq_divisor"))
                    dev_in.chisq_divisor = j["chisq_divisor"].get<double>();
            } else {
                dev_in.events = events;
            }
            return cmd_samplesize_dev(dev_in, out, !out_dir.empty());
        }
        if (ss_cmd->got_subcommand(ss_val)) {
            std::vector<mpm::ExtSubmodelInput> submodels;
            if (!json_input.empty()) {
                const auto j = ordered_json::parse(read_file(json_input));
                for (const auto& s : j.at("submodels")) {
                    mpm::ExtSubmodelInput in;
                    in.label = s.value("label", "Submodel " +
                                                    std::to_string(submodels.size() + 1));
                    in.prevalence = s.at("prevalence").get<double>();
                    in.se_oe = s.at("se_oe").get<double>();
                    in.lp_mean = s.at("lp_mean").get<double>();
                    in.lp_sd = s.at("lp_sd").get<double>();
                    in.se_slope = s.at("se_slope").get<double>();
                    in.c_statistic = s.at("c_statistic").get<double>();
                    in.se_c = s.at("se_c").get<double>();
                    submodels.push_back(in);
                }
            } else {
                for (const auto& flag : submodel_flags)
                    submodels.push_back(parse_submodel_flag(flag));
            }
            return cmd_samplesize_val(submodels, out, !out_dir.empty());
        }
        throw mpm::DataError("no subcommand given");
    } catch (const mpm::PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const mpm::FitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const mpm::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
