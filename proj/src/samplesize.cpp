#include "mpm/samplesize.hpp"

#include "mpm/errors.hpp"
#include "mpm/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace mpm {

namespace {

double cox_snell_max_r2_binary(double phi) {
    // 1 - (phi^phi (1-phi)^(1-phi))^2, the max Cox-Snell R^2 at prevalence phi
    const double ll0 = phi * std::log(phi) + (1.0 - phi) * std::log(1.0 - phi);
    return 1.0 - std::exp(2.0 * ll0);
}

long round_to_long(double v) { return std::lround(v); }

} // namespace

DevSampleSizeResult dev_sample_size(const DevSampleSizeInput& in) {
    if (in.q_parameters < 1) throw DataError("dev_sample_size: Q must be at least 1");
    if (in.events.size() < 2)
        throw DataError("dev_sample_size: need event counts for at least 2 categories");
    for (double ev : in.events)
        if (!(ev >= 1.0)) throw DataError("dev_sample_size: every EV_k must be >= 1");
    if (!(in.shrinkage > 0.0 && in.shrinkage < 1.0))
        throw DataError("dev_sample_size: shrinkage S must lie in (0,1)");
    if (!(in.r2_fraction > 0.0 && in.r2_fraction < 1.0))
        throw DataError("dev_sample_size: R2 fraction must lie in (0,1)");
    if (!(in.delta > 0.0)) throw DataError("dev_sample_size: delta must be positive");
    if (!(in.chisq_divisor > 0.0))
        throw DataError("dev_sample_size: chi-squared divisor must be positive");

    DevSampleSizeResult out;
    const std::size_t k = in.events.size();
    out.n_total = 0.0;
    for (double ev : in.events) out.n_total += ev;

    double log_prod = 0.0;
    for (double ev : in.events) {
        const double p = ev / out.n_total;
        if (!(p > 0.0 && p < 1.0))
            throw DataError("dev_sample_size: degenerate category prevalence");
        out.prevalences.push_back(p);
        log_prod += p * std::log(p);
    }
    out.max_r2cs = 1.0 - std::exp(2.0 * log_prod);
    out.r2cs_adj = in.r2_fraction * out.max_r2cs;

    const double q = static_cast<double>(in.q_parameters);
    const double s = in.shrinkage;

    // criterion 1: shrinkage target per outcome pair
    double crit1_raw = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            DevPairResult pair;
            pair.cat_a = a;
            pair.cat_b = b;
            const double ev_a = in.events[a];
            const double ev_b = in.events[b];
            pair.phi = ev_b / (ev_a + ev_b);
            pair.p_pair = (ev_a + ev_b) / out.n_total;
            pair.r2_adj_pair = in.r2_fraction * cox_snell_max_r2_binary(pair.phi);
            if (pair.r2_adj_pair >= s)
                throw DataError("dev_sample_size: adjusted R2 for pair (" +
                                std::to_string(a + 1) + "," + std::to_string(b + 1) +
                                ") is not below the shrinkage target S; the shrinkage "
                                "formula is undefined");
            pair.m = q / ((s - 1.0) * std::log(1.0 - pair.r2_adj_pair / s));
            pair.n = pair.m / pair.p_pair;
            crit1_raw = std::max(crit1_raw, pair.n);
            out.pairs.push_back(pair);
        }
    }
    out.criterion1 = static_cast<long>(std::ceil(crit1_raw));

    // criterion 2: small difference between apparent and adjusted Nagelkerke R^2
    const double margin = in.delta * out.max_r2cs;
    out.criterion2_raw = 4.0 * q /
                         ((out.r2cs_adj / (out.r2cs_adj + margin) - 1.0) *
                          std::log(1.0 - out.r2cs_adj - margin));
    out.criterion2 = static_cast<long>(std::ceil(out.criterion2_raw));

    // criterion 3: precise estimate of each category's baseline risk
    const double chi2 = chi_squared_quantile_1df(1.0 - 0.05 / in.chisq_divisor);
    double crit3_raw = 0.0;
    for (double p : out.prevalences) {
        const double nc = chi2 * p * (1.0 - p) / (in.delta * in.delta);
        out.criterion3_raw.push_back(nc);
        crit3_raw = std::max(crit3_raw, nc);
    }
    out.criterion3 = static_cast<long>(std::ceil(crit3_raw));

    out.final_n = std::max({out.criterion1, out.criterion2, out.criterion3});
    if (out.final_n == out.criterion1) out.driving_criterion = 1;
    else if (out.final_n == out.criterion2) out.driving_criterion = 2;
    else out.driving_criterion = 3;
    return out;
}

namespace {

struct SlopeInformation {
    double i_aa;
    double i_ab;
    double i_bb;
};

SlopeInformation slope_information(double lp_mean, double lp_sd, const GaussHermiteRule& gh) {
    // E[w], E[LP w], E[LP^2 w] with w = p(1-p), p = logistic(LP),
    // LP ~ N(mean, sd): substitute LP = mean + sd*sqrt(2)*t against exp(-t^2).
    const double inv_sqrt_pi = 0.5641895835477563;
    const double sqrt2 = 1.4142135623730951;
    SlopeInformation info{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        const double lp = lp_mean + lp_sd * sqrt2 * gh.nodes[i];
        const double p = 1.0 / (1.0 + std::exp(-lp));
        const double w = p * (1.0 - p);
        const double weight = gh.weights[i] * inv_sqrt_pi;
        info.i_aa += weight * w;
        info.i_ab += weight * lp * w;
        info.i_bb += weight * lp * lp * w;
    }
    return info;
}

double slope_n_raw(const ExtSubmodelInput& in, int nodes) {
    const SlopeInformation info = slope_information(in.lp_mean, in.lp_sd, gauss_hermite(nodes));
    const double det = info.i_aa * info.i_bb - info.i_ab * info.i_ab;
    if (!(det > 0.0))
        throw FitError("ext_sample_size: singular expected information for the slope "
                       "criterion");
    return info.i_aa / (in.se_slope * in.se_slope * det);
}

double c_statistic_se(double c, double n, double phi) {
    const double half = n / 2.0 - 1.0;
    const double numer =
        c * (1.0 - c) * (1.0 + half * (1.0 - c) / (2.0 - c) + half * c / (1.0 + c));
    return std::sqrt(numer / (n * n * phi * (1.0 - phi)));
}

} // namespace

ExtSampleSizeResult ext_sample_size(const std::vector<ExtSubmodelInput>& submodels,
                                    int quadrature_nodes) {
    if (submodels.empty()) throw DataError("ext_sample_size: no submodels given");
    if (quadrature_nodes < 40)
        throw DataError("ext_sample_size: quadrature needs at least 40 nodes");

    ExtSampleSizeResult out;
    out.overall = 0;

    for (const auto& sub : submodels) {
        if (!(sub.prevalence > 0.0 && sub.prevalence < 1.0))
            throw DataError("ext_sample_size: prevalence must lie strictly in (0,1)");
        if (!(sub.se_oe > 0.0 && sub.se_slope > 0.0 && sub.se_c > 0.0))
            throw DataError("ext_sample_size: target SEs must be positive");
        if (!(sub.lp_sd > 0.0)) throw DataError("ext_sample_size: LP sd must be positive");
        if (!(sub.c_statistic >= 0.5 && sub.c_statistic < 1.0))
            throw DataError("ext_sample_size: expected c-statistic must lie in [0.5, 1)");

        ExtSubmodelResult res;
        res.label = sub.label;

        res.n_oe_raw = (1.0 - sub.prevalence) / (sub.prevalence * sub.se_oe * sub.se_oe);
        if (!std::isfinite(res.n_oe_raw) || res.n_oe_raw <= 0.0)
            throw FitError("ext_sample_size: O/E criterion under/overflowed");
        res.n_oe = round_to_long(res.n_oe_raw);

        // node-doubling convergence check (< 0.1% change)
        int nodes = quadrature_nodes;
        double n_slope = slope_n_raw(sub, nodes);
        for (;;) {
            const double refined = slope_n_raw(sub, nodes * 2);
            if (std::abs(refined - n_slope) <= 1e-3 * std::abs(refined)) {
                n_slope = refined;
                nodes *= 2;
                break;
            }
            n_slope = refined;
            nodes *= 2;
            if (nodes > 4096)
                throw FitError("ext_sample_size: slope quadrature did not converge");
        }
        out.quadrature_nodes = std::max(out.quadrature_nodes, nodes);
        res.n_slope_raw = n_slope;
        res.n_slope = round_to_long(n_slope);

        // SE(C) is decreasing in n: bisect for the continuous crossing
        double lo = 2.0;
        double hi = 2.0;
        while (c_statistic_se(sub.c_statistic, hi, sub.prevalence) > sub.se_c) {
            hi *= 2.0;
            if (hi > 1e12)
                throw FitError("ext_sample_size: c-statistic criterion exceeds 1e12 subjects");
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (c_statistic_se(sub.c_statistic, mid, sub.prevalence) <= sub.se_c)
                hi = mid;
            else
                lo = mid;
        }
        res.n_c_raw = hi;
        res.n_c = round_to_long(hi);

        res.submodel_max = std::max({res.n_oe, res.n_slope, res.n_c});
        if (res.submodel_max == res.n_slope) res.driving = "calibration slope";
        else if (res.submodel_max == res.n_oe) res.driving = "O/E";
        else res.driving = "c-statistic";

        if (res.submodel_max > out.overall) {
            out.overall = res.submodel_max;
            out.driving = res.label + ": " + res.driving;
        }
        out.submodels.push_back(std::move(res));
    }
    return out;
}

} // namespace mpm
