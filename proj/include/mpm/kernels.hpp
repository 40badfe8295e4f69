#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops used by the fitting and evaluation code paths.
// Each kernel has a scalar reference implementation and, on x86-64, an AVX2+FMA
// variant; the active set is chosen once at startup from CPUID and can be
// overridden with MPMKIT_SIMD=scalar|avx2|auto. The two implementations are
// equivalence-tested against each other in tests/test_kernels.cpp.

namespace mpm::kernels {

struct Ops {
    const char* name;

    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);

    // sum_i a[i] * b[i] * w[i]
    double (*weighted_dot)(const double* a, const double* b, const double* w,
                           std::size_t n);

    // sum_i a[i]
    double (*sum)(const double* a, std::size_t n);

    // out[i] = exp(x[i])
    void (*vexp)(const double* x, double* out, std::size_t n);

    // Stabilized softmax over k categories laid out as columns of length n.
    // lp[j] (j = 0..k-2) holds the linear predictor of category j+1 vs the
    // reference; the reference category has implicit linear predictor 0.
    // prob[c] (c = 0..k-1) receives the category-c probability per subject.
    // Each row is shifted by max(0, lp_1..lp_{k-1}) before exponentiation so
    // linear predictors up to +-700 stay finite and normalized.
    void (*softmax)(const double* const* lp, std::size_t k_minus_1,
                    double* const* prob, std::size_t n);
};

const Ops& scalar();

// AVX2+FMA variants; null on non-x86 builds.
const Ops* avx2();

bool avx2_supported();

// Active set per dispatch policy (CPUID + MPMKIT_SIMD override), resolved once.
const Ops& active();

} // namespace mpm::kernels
