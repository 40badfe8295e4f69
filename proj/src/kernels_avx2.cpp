#include "mpm/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace mpm::kernels {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double weighted_dot_avx2(const double* a, const double* b, const double* w,
                         std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d ab0 = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        const __m256d ab1 = _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_fmadd_pd(ab0, _mm256_loadu_pd(w + i), acc0);
        acc1 = _mm256_fmadd_pd(ab1, _mm256_loadu_pd(w + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        const __m256d ab = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc0 = _mm256_fmadd_pd(ab, _mm256_loadu_pd(w + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i] * w[i];
    return acc;
}

double sum_avx2(const double* a, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
    double acc = hsum(acc0);
    for (; i < n; ++i) acc += a[i];
    return acc;
}

// exp for 4 doubles, Cephes-style rational approximation after base-2 range
// reduction. Inputs are clamped to +-708 to stay inside the normal range of
// the 2^n exponent rescaling.
inline __m256d exp4(__m256d x) {
    const __m256d hi = _mm256_set1_pd(708.0);
    const __m256d lo = _mm256_set1_pd(-708.0);
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);
    const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
    const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
    const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
    const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
    const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
    const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
    const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);

    x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

    const __m256d nf =
        _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    x = _mm256_fnmadd_pd(nf, c1, x);
    x = _mm256_fnmadd_pd(nf, c2, x);

    const __m256d xx = _mm256_mul_pd(x, x);
    __m256d px = _mm256_fmadd_pd(p0, xx, p1);
    px = _mm256_fmadd_pd(px, xx, p2);
    px = _mm256_mul_pd(px, x);
    __m256d qx = _mm256_fmadd_pd(q0, xx, q1);
    qx = _mm256_fmadd_pd(qx, xx, q2);
    qx = _mm256_fmadd_pd(qx, xx, q3);

    const __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
    const __m256d r = _mm256_fmadd_pd(two, e, one);

    // scale by 2^n through the exponent bits
    const __m128i n32 = _mm256_cvtpd_epi32(nf);
    __m256i n64 = _mm256_cvtepi32_epi64(n32);
    n64 = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
    n64 = _mm256_slli_epi64(n64, 52);
    return _mm256_mul_pd(r, _mm256_castsi256_pd(n64));
}

void vexp_avx2(const double* x, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = std::exp(std::clamp(x[i], -708.0, 708.0));
}

void softmax_avx2(const double* const* lp, std::size_t m, double* const* prob,
                  std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d shift = _mm256_setzero_pd();
        for (std::size_t j = 0; j < m; ++j)
            shift = _mm256_max_pd(shift, _mm256_loadu_pd(lp[j] + i));
        __m256d denom = exp4(_mm256_sub_pd(_mm256_setzero_pd(), shift));
        _mm256_storeu_pd(prob[0] + i, denom);
        for (std::size_t j = 0; j < m; ++j) {
            const __m256d e = exp4(_mm256_sub_pd(_mm256_loadu_pd(lp[j] + i), shift));
            _mm256_storeu_pd(prob[j + 1] + i, e);
            denom = _mm256_add_pd(denom, e);
        }
        for (std::size_t c = 0; c <= m; ++c)
            _mm256_storeu_pd(prob[c] + i, _mm256_div_pd(_mm256_loadu_pd(prob[c] + i), denom));
    }
    if (i < n) {
        // tail via the reference path on shifted views
        const std::size_t rest = n - i;
        std::vector<const double*> lp_tail(m);
        std::vector<double*> prob_tail(m + 1);
        for (std::size_t j = 0; j < m; ++j) lp_tail[j] = lp[j] + i;
        for (std::size_t c = 0; c <= m; ++c) prob_tail[c] = prob[c] + i;
        scalar().softmax(lp_tail.data(), m, prob_tail.data(), rest);
    }
}

const Ops avx2_ops = {
    "avx2", dot_avx2, weighted_dot_avx2, sum_avx2, vexp_avx2, softmax_avx2,
};

} // namespace

const Ops* avx2() { return &avx2_ops; }

} // namespace mpm::kernels

#else

namespace mpm::kernels {
const Ops* avx2() { return nullptr; }
} // namespace mpm::kernels

#endif
