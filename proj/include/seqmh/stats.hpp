#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

// Scalar special functions used throughout the library. Everything here is
// deterministic and allocation-free.

namespace seqmh {

inline double normal_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014327;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

// Upper tail P(Z > x), accurate for large x where 1 - cdf would cancel.
inline double normal_tail(double x) {
    return 0.5 * std::erfc(x * 0.70710678118654752440);
}

// Inverse of the standard normal CDF. Rational approximation refined with a
// Halley step against erfc, giving close to full double precision.
double normal_quantile(double p);

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation with the usual symmetry switch. Absolute error below 1e-12
// over the arguments used here (a, b >= 0.5).
double reg_inc_beta(double a, double b, double x);

// Student-t upper tail delta = 1 - F_df(|t|) in [0, 0.5]. df may be
// non-integral; above 1e6 degrees of freedom the normal tail is used
// (difference is below the beta-function tolerance there).
double student_t_tail(double t_abs, double df);

inline double log1p_exp(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

inline double logit(double u) {
    return std::log(u) - std::log1p(-u);
}

inline double log_normal_density(double x, double mean, double variance) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * 3.141592653589793 * variance) + d * d / variance);
}

// Gauss-Hermite nodes and weights (physicists' convention, weight e^{-z^2}).
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussHermite gauss_hermite(int n);

} // namespace seqmh
