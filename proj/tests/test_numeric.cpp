#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mpm/errors.hpp"
#include "mpm/numeric.hpp"

#include <cmath>

using namespace mpm;

TEST_CASE("normal quantile matches reference values") {
    CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(inverse_normal_cdf(0.995) == doctest::Approx(2.5758293035489004).epsilon(1e-12));
    CHECK(inverse_normal_cdf(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
    CHECK(inverse_normal_cdf(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-9));
    CHECK_THROWS_AS(inverse_normal_cdf(0.0), DataError);
    CHECK_THROWS_AS(inverse_normal_cdf(1.0), DataError);
}

TEST_CASE("chi-squared 1df quantile") {
    CHECK(chi_squared_quantile_1df(0.99) == doctest::Approx(6.634896601021213).epsilon(1e-12));
    CHECK(chi_squared_quantile_1df(0.95) == doctest::Approx(3.841458820694124).epsilon(1e-12));
}

TEST_CASE("Gauss-Hermite rule integrates known moments") {
    const double sqrt_pi = std::sqrt(M_PI);
    for (int n : {5, 20, 40, 64, 80}) {
        const auto rule = gauss_hermite(n);
        double w_sum = 0.0, x2 = 0.0;
        for (int i = 0; i < n; ++i) {
            w_sum += rule.weights[i];
            x2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
        }
        CHECK(w_sum == doctest::Approx(sqrt_pi).epsilon(1e-12));
        CHECK(x2 == doctest::Approx(sqrt_pi / 2.0).epsilon(1e-12));
    }
    // integral of exp(a t) exp(-t^2) = sqrt(pi) exp(a^2/4)
    const auto rule = gauss_hermite(40);
    const double a = 1.3;
    double val = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        val += rule.weights[i] * std::exp(a * rule.nodes[i]);
    CHECK(val == doctest::Approx(sqrt_pi * std::exp(a * a / 4.0)).epsilon(1e-12));
}

TEST_CASE("type-7 quantiles") {
    CHECK(quantile_type7({5, 1, 3, 2, 4}, 0.5) == doctest::Approx(3.0));
    CHECK(quantile_type7({5, 1, 3, 2, 4}, 0.25) == doctest::Approx(2.0));
    CHECK(quantile_type7({5, 1, 3, 2, 4}, 0.75) == doctest::Approx(4.0));
    CHECK(quantile_type7({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
    CHECK(quantile_type7({7}, 0.9) == doctest::Approx(7.0));
    CHECK_THROWS_AS(quantile_type7({}, 0.5), DataError);
}

TEST_CASE("natural spline basis is linear beyond the boundary knots") {
    NaturalSplineBasis basis({-1.0, 0.0, 0.5, 2.0});
    REQUIRE(basis.n_columns() == 3);
    auto eval = [&](double x) {
        std::vector<double> out(3);
        basis.evaluate(x, out.data());
        return out;
    };
    // beyond the last knot the nonlinear columns must be affine in x
    const auto a = eval(3.0);
    const auto b = eval(4.0);
    const auto c = eval(5.0);
    for (std::size_t j = 1; j < 3; ++j) {
        const double slope1 = b[j] - a[j];
        const double slope2 = c[j] - b[j];
        CHECK(slope1 == doctest::Approx(slope2).epsilon(1e-9));
    }
    const auto lo1 = eval(-2.0);
    const auto lo2 = eval(-3.0);
    for (std::size_t j = 1; j < 3; ++j)
        CHECK(lo1[j] == doctest::Approx(0.0).epsilon(1e-12)); // zero left of first knot
    CHECK(lo2[0] == doctest::Approx(-3.0));
    CHECK_THROWS_AS(NaturalSplineBasis({1.0, 1.0}), DataError);
}

TEST_CASE("rng determinism and bounds") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
        const double u = c.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(c.next_below(10) < 10);
    }
    Rng n(7);
    double sum = 0.0, sq = 0.0;
    const int draws = 20000;
    for (int i = 0; i < draws; ++i) {
        const double z = n.next_normal();
        sum += z;
        sq += z * z;
    }
    CHECK(sum / draws == doctest::Approx(0.0).epsilon(0.05));
    CHECK(sq / draws == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("fnv1a64 fingerprints") {
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
    CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a64_hex("hello") != fnv1a64_hex("hellp"));
}

TEST_CASE("format_double round-trips bit-exactly") {
    for (double v : {1.0 / 3.0, 3.141592653589793, 1e-300, -2.2250738585072014e-308,
                     6.93145751953125e-1, 0.0, -123456.789}) {
        const double back = std::stod(format_double(v));
        CHECK(back == v);
    }
}
