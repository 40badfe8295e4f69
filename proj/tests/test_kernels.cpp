#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mpm/kernels.hpp"
#include "mpm/numeric.hpp"

#include <cmath>
#include <vector>

using namespace mpm;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = lo + (hi - lo) * rng.next_double();
    return v;
}

} // namespace

TEST_CASE("scalar kernels match plain formulas") {
    Rng rng(11);
    const auto a = random_vector(257, rng);
    const auto b = random_vector(257, rng);
    const auto w = random_vector(257, rng, 0.0, 1.0);
    const auto& ops = kernels::scalar();

    double dot = 0.0, wdot = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        wdot += a[i] * b[i] * w[i];
        sum += a[i];
    }
    CHECK(ops.dot(a.data(), b.data(), a.size()) == doctest::Approx(dot).epsilon(1e-14));
    CHECK(ops.weighted_dot(a.data(), b.data(), w.data(), a.size()) ==
          doctest::Approx(wdot).epsilon(1e-14));
    CHECK(ops.sum(a.data(), a.size()) == doctest::Approx(sum).epsilon(1e-14));
}

TEST_CASE("avx2 kernels agree with scalar reference") {
    if (!kernels::avx2_supported() || !kernels::avx2()) {
        MESSAGE("AVX2 not available; equivalence test skipped");
        return;
    }
    const auto& simd = *kernels::avx2();
    const auto& ref = kernels::scalar();
    Rng rng(17);

    for (std::size_t n : {std::size_t(1), std::size_t(3), std::size_t(4), std::size_t(7),
                          std::size_t(8), std::size_t(63), std::size_t(64), std::size_t(1001)}) {
        const auto a = random_vector(n, rng, -3.0, 3.0);
        const auto b = random_vector(n, rng, -3.0, 3.0);
        const auto w = random_vector(n, rng, 0.0, 0.25);

        double scale_ab = 1e-300;
        for (std::size_t i = 0; i < n; ++i) scale_ab += std::abs(a[i] * b[i]);
        CHECK(std::abs(simd.dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <=
              1e-13 * scale_ab);
        CHECK(std::abs(simd.weighted_dot(a.data(), b.data(), w.data(), n) -
                       ref.weighted_dot(a.data(), b.data(), w.data(), n)) <= 1e-13 * scale_ab);
        double scale_a = 1e-300;
        for (std::size_t i = 0; i < n; ++i) scale_a += std::abs(a[i]);
        CHECK(std::abs(simd.sum(a.data(), n) - ref.sum(a.data(), n)) <= 1e-13 * scale_a);
    }
}

TEST_CASE("vectorized exp matches std::exp to near machine precision") {
    if (!kernels::avx2_supported() || !kernels::avx2()) return;
    const auto& simd = *kernels::avx2();
    Rng rng(23);

    std::vector<double> x = random_vector(4096, rng, -700.0, 700.0);
    x.push_back(0.0);
    x.push_back(1.0);
    x.push_back(-1.0);
    x.push_back(700.0);
    x.push_back(-700.0);
    x.push_back(1e-12);
    std::vector<double> out(x.size());
    simd.vexp(x.data(), out.data(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double exact = std::exp(x[i]);
        CHECK(std::abs(out[i] - exact) <= 1e-14 * exact);
    }
}

TEST_CASE("softmax kernels: equivalence, normalization, +-700 stability") {
    const auto& ref = kernels::scalar();
    Rng rng(31);

    for (std::size_t m : {std::size_t(1), std::size_t(2), std::size_t(4)}) {
        const std::size_t n = 517;
        std::vector<std::vector<double>> lp(m);
        std::vector<const double*> lp_ptr(m);
        for (std::size_t j = 0; j < m; ++j) {
            lp[j] = random_vector(n, rng, -700.0, 700.0);
            lp_ptr[j] = lp[j].data();
        }
        std::vector<std::vector<double>> p_ref(m + 1, std::vector<double>(n));
        std::vector<double*> p_ref_ptr(m + 1);
        for (std::size_t c = 0; c <= m; ++c) p_ref_ptr[c] = p_ref[c].data();
        ref.softmax(lp_ptr.data(), m, p_ref_ptr.data(), n);

        for (std::size_t i = 0; i < n; ++i) {
            double total = 0.0;
            for (std::size_t c = 0; c <= m; ++c) {
                CHECK(std::isfinite(p_ref[c][i]));
                CHECK(p_ref[c][i] >= 0.0);
                CHECK(p_ref[c][i] <= 1.0);
                total += p_ref[c][i];
            }
            CHECK(std::abs(total - 1.0) <= 1e-10);
        }

        if (kernels::avx2_supported() && kernels::avx2()) {
            std::vector<std::vector<double>> p_simd(m + 1, std::vector<double>(n));
            std::vector<double*> p_simd_ptr(m + 1);
            for (std::size_t c = 0; c <= m; ++c) p_simd_ptr[c] = p_simd[c].data();
            kernels::avx2()->softmax(lp_ptr.data(), m, p_simd_ptr.data(), n);
            for (std::size_t c = 0; c <= m; ++c)
                for (std::size_t i = 0; i < n; ++i)
                    CHECK(std::abs(p_simd[c][i] - p_ref[c][i]) <= 1e-13);
        }
    }
}

TEST_CASE("active kernel set is resolved") {
    const auto& ops = kernels::active();
    CHECK((std::string(ops.name) == "scalar" || std::string(ops.name) == "avx2"));
    const double v[3] = {1.0, 2.0, 3.0};
    CHECK(ops.sum(v, 3) == doctest::Approx(6.0));
}
