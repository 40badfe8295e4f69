#include "mpm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace mpm::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double weighted_dot_scalar(const double* a, const double* b, const double* w,
                           std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i] * w[i];
    return acc;
}

double sum_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

// Arguments outside +-708 are clamped so both implementations stay inside the
// normal double range; softmax shifts make its inputs <= 0 anyway.
double exp_clamped(double x) { return std::exp(std::clamp(x, -708.0, 708.0)); }

void vexp_scalar(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = exp_clamped(x[i]);
}

void softmax_scalar(const double* const* lp, std::size_t m, double* const* prob,
                    std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double shift = 0.0;
        for (std::size_t j = 0; j < m; ++j) shift = std::max(shift, lp[j][i]);
        double denom = exp_clamped(-shift);
        prob[0][i] = denom;
        for (std::size_t j = 0; j < m; ++j) {
            const double e = exp_clamped(lp[j][i] - shift);
            prob[j + 1][i] = e;
            denom += e;
        }
        for (std::size_t c = 0; c <= m; ++c) prob[c][i] /= denom;
    }
}

const Ops scalar_ops = {
    "scalar", dot_scalar, weighted_dot_scalar, sum_scalar, vexp_scalar, softmax_scalar,
};

} // namespace

const Ops& scalar() { return scalar_ops; }

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Ops& active() {
    static const Ops* chosen = [] {
        const char* env = std::getenv("MPMKIT_SIMD");
        const std::string mode = env ? env : "auto";
        if (mode == "scalar") return &scalar_ops;
        const Ops* simd = avx2();
        if (simd && avx2_supported()) return simd;
        return &scalar_ops;
    }();
    return *chosen;
}

} // namespace mpm::kernels
