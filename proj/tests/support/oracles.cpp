#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace oracle {

double loglik(const Eigen::MatrixXd& X, const std::vector<int>& y,
              const Eigen::MatrixXd& beta) {
    const Eigen::Index k1 = beta.rows();
    double ll = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double denom = 1.0;
        std::vector<double> ex(static_cast<std::size_t>(k1));
        for (Eigen::Index j = 0; j < k1; ++j) {
            double lp = beta(j, 0);
            for (Eigen::Index a = 0; a < X.cols(); ++a)
                lp += beta(j, a + 1) * X(static_cast<Eigen::Index>(i), a);
            ex[static_cast<std::size_t>(j)] = std::exp(lp);
            denom += ex[static_cast<std::size_t>(j)];
        }
        const double p = y[i] == 0 ? 1.0 / denom : ex[static_cast<std::size_t>(y[i] - 1)] / denom;
        ll += std::log(p);
    }
    return ll;
}

Eigen::VectorXd fd_gradient(const Eigen::MatrixXd& X, const std::vector<int>& y,
                            const Eigen::MatrixXd& beta, double h) {
    const Eigen::Index k1 = beta.rows();
    const Eigen::Index m = beta.cols();
    Eigen::VectorXd g(k1 * m);
    for (Eigen::Index j = 0; j < k1; ++j) {
        for (Eigen::Index a = 0; a < m; ++a) {
            Eigen::MatrixXd up = beta;
            Eigen::MatrixXd down = beta;
            up(j, a) += h;
            down(j, a) -= h;
            g[j * m + a] = (loglik(X, y, up) - loglik(X, y, down)) / (2.0 * h);
        }
    }
    return g;
}

Eigen::MatrixXd grid_maximize(const Eigen::MatrixXd& X, const std::vector<int>& y, int k,
                              double span, double final_span) {
    const Eigen::Index k1 = k - 1;
    const Eigen::Index m = X.cols() + 1;
    Eigen::MatrixXd best = Eigen::MatrixXd::Zero(k1, m);
    double best_ll = loglik(X, y, best);

    double width = span;
    while (width > final_span) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (Eigen::Index j = 0; j < k1; ++j) {
                for (Eigen::Index a = 0; a < m; ++a) {
                    const double center = best(j, a);
                    for (int g = -8; g <= 8; ++g) {
                        if (g == 0) continue;
                        Eigen::MatrixXd cand = best;
                        cand(j, a) = center + width * static_cast<double>(g) / 8.0;
                        const double ll = loglik(X, y, cand);
                        if (ll > best_ll + 1e-15) {
                            best_ll = ll;
                            best = cand;
                            improved = true;
                        }
                    }
                }
            }
        }
        width *= 0.5;
    }
    return best;
}

double pdi_bruteforce(const Eigen::MatrixXd& probs, const std::vector<int>& outcomes) {
    const int k = static_cast<int>(probs.cols());
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        members[static_cast<std::size_t>(outcomes[i])].push_back(i);
    for (const auto& mv : members)
        if (mv.empty()) throw std::runtime_error("pdi_bruteforce: unobserved category");

    std::vector<std::size_t> pick(static_cast<std::size_t>(k), 0);
    double score_sum = 0.0;
    double tuple_count = 0.0;
    for (;;) {
        for (int j = 0; j < k; ++j) {
            const std::size_t subj_j = members[static_cast<std::size_t>(j)][pick[static_cast<std::size_t>(j)]];
            const double own = probs(static_cast<Eigen::Index>(subj_j), j);
            int greater = 0;
            int equal = 0;
            for (int c = 0; c < k; ++c) {
                const std::size_t subj = members[static_cast<std::size_t>(c)][pick[static_cast<std::size_t>(c)]];
                const double v = probs(static_cast<Eigen::Index>(subj), j);
                if (v > own) ++greater;
                else if (v == own) ++equal; // self included
            }
            if (greater == 0) score_sum += 1.0 / static_cast<double>(equal);
        }
        tuple_count += 1.0;
        int c = 0;
        for (; c < k; ++c) {
            if (++pick[static_cast<std::size_t>(c)] < members[static_cast<std::size_t>(c)].size()) break;
            pick[static_cast<std::size_t>(c)] = 0;
        }
        if (c == k) break;
    }
    return score_sum / (tuple_count * static_cast<double>(k));
}

double pairwise_c_bruteforce(const Eigen::MatrixXd& probs, const std::vector<int>& outcomes,
                             std::size_t cat_a, std::size_t cat_b) {
    std::vector<double> a_scores;
    std::vector<double> b_scores;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto c = static_cast<std::size_t>(outcomes[i]);
        if (c != cat_a && c != cat_b) continue;
        const double pa = probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cat_a));
        const double pb = probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cat_b));
        const double score = pb / (pa + pb);
        (c == cat_b ? b_scores : a_scores).push_back(score);
    }
    if (a_scores.empty() || b_scores.empty())
        throw std::runtime_error("pairwise_c_bruteforce: empty side");
    double wins = 0.0;
    for (double b : b_scores) {
        for (double a : a_scores) {
            if (b > a) wins += 1.0;
            else if (b == a) wins += 0.5;
        }
    }
    return wins / (static_cast<double>(a_scores.size()) * static_cast<double>(b_scores.size()));
}

std::vector<int> draw_outcomes(const Eigen::MatrixXd& probs, mpm::Rng& rng) {
    std::vector<int> y(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const double u = rng.next_double();
        double acc = 0.0;
        int pick = static_cast<int>(probs.cols()) - 1;
        for (Eigen::Index c = 0; c < probs.cols(); ++c) {
            acc += probs(i, c);
            if (u < acc) {
                pick = static_cast<int>(c);
                break;
            }
        }
        y[static_cast<std::size_t>(i)] = pick;
    }
    return y;
}

mpm::Dataset synthetic_dataset(const Eigen::MatrixXd& beta, std::size_t n, std::uint64_t seed,
                               const std::vector<std::string>& categories,
                               const std::vector<std::string>& predictors) {
    const Eigen::Index k1 = beta.rows();
    const Eigen::Index p = beta.cols() - 1;
    mpm::Rng rng(seed);

    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), p);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index a = 0; a < p; ++a) X(i, a) = rng.next_normal();

    Eigen::MatrixXd probs(static_cast<Eigen::Index>(n), k1 + 1);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double denom = 1.0;
        std::vector<double> ex(static_cast<std::size_t>(k1));
        for (Eigen::Index j = 0; j < k1; ++j) {
            double lp = beta(j, 0);
            for (Eigen::Index a = 0; a < p; ++a) lp += beta(j, a + 1) * X(i, a);
            ex[static_cast<std::size_t>(j)] = std::exp(lp);
            denom += ex[static_cast<std::size_t>(j)];
        }
        probs(i, 0) = 1.0 / denom;
        for (Eigen::Index j = 0; j < k1; ++j) probs(i, j + 1) = ex[static_cast<std::size_t>(j)] / denom;
    }
    const std::vector<int> y = draw_outcomes(probs, rng);

    mpm::Dataset d;
    for (Eigen::Index a = 0; a < p; ++a) {
        d.predictor_names.push_back(
            a < static_cast<Eigen::Index>(predictors.size())
                ? predictors[static_cast<std::size_t>(a)]
                : "x" + std::to_string(a + 1));
        d.columns.emplace_back(X.col(a).data(), X.col(a).data() + X.rows());
    }
    for (Eigen::Index c = 0; c <= k1; ++c)
        d.categories.push_back(c < static_cast<Eigen::Index>(categories.size())
                                   ? categories[static_cast<std::size_t>(c)]
                                   : "C" + std::to_string(c));
    d.outcome = y;
    return d;
}

mpm::Dataset make_dataset(const std::vector<std::vector<double>>& columns,
                          const std::vector<int>& outcome, std::size_t k) {
    mpm::Dataset d;
    for (std::size_t j = 0; j < columns.size(); ++j) {
        d.predictor_names.push_back("x" + std::to_string(j + 1));
        d.columns.push_back(columns[j]);
    }
    for (std::size_t c = 0; c < k; ++c) d.categories.push_back("C" + std::to_string(c));
    d.outcome = outcome;
    return d;
}

} // namespace oracle
