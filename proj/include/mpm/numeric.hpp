#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mpm {

// Standard normal quantile (Wichura's AS241, double precision).
double inverse_normal_cdf(double p);

// Chi-squared quantile with 1 degree of freedom.
double chi_squared_quantile_1df(double p);

// z for two-sided 95% intervals.
inline double normal_z975() { return 1.959963984540054; }

// Gauss-Hermite nodes/weights for integrals of f(t)*exp(-t^2).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussHermiteRule gauss_hermite(int n);

// Type-7 quantile (linear interpolation between order statistics) of an
// unsorted sample. q in [0,1].
double quantile_type7(std::vector<double> values, double q);

double mean(const std::vector<double>& values);
double sample_sd(const std::vector<double>& values); // n-1 denominator, 0 for n<2

// Natural cubic spline basis in truncated-power (rcs) form. K knots yield
// K-1 columns: the identity plus K-2 nonlinear terms, linear beyond the
// boundary knots.
class NaturalSplineBasis {
public:
    explicit NaturalSplineBasis(std::vector<double> knots);
    std::size_t n_columns() const { return knots_.size() - 1; }
    // Fills out[0..n_columns) with the basis evaluated at x.
    void evaluate(double x, double* out) const;

private:
    std::vector<double> knots_;
    double scale_; // (t_K - t_1)^2 normalization
};

// Deterministic RNG used for every randomized procedure in the toolkit, so
// results are identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next_u64(); // splitmix64 step
    double next_double();     // uniform in [0,1)
    std::uint64_t next_below(std::uint64_t bound);
    double next_normal();     // inverse-CDF method

private:
    std::uint64_t state_;
};

// FNV-1a 64-bit hash, hex-encoded; stable fingerprint for provenance blocks.
std::string fnv1a64_hex(const std::string& bytes);

// Runs fn(0..count-1), possibly across threads (capped by MPMKIT_THREADS),
// with results keyed by index so the outcome is order-independent.
void parallel_for_index(std::size_t count, const std::function<void(std::size_t)>& fn);

// Thread cap from MPMKIT_THREADS (default 1).
unsigned thread_cap();

// Full-precision decimal formatting (%.17g): parses back bit-exactly.
std::string format_double(double v);

} // namespace mpm
