#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

namespace rfcurves {

/// Gaussian tail probability Q(x) = P(Z > x), Z ~ N(0,1).
/// Computed via erfc to stay accurate deep in the tail.
double q_function(double x);

/// Standard normal density.
double std_normal_pdf(double x);

/// Quadrature rule expressed against the standard normal weight:
/// sum_i w_i f(x_i) ~ E[f(Z)], Z ~ N(0,1).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;
};

/// Gauss-Hermite rule rescaled to the standard normal measure.
/// Exact for polynomials of degree < 2*order. Valid order range [2, 512].
QuadratureRule gauss_hermite_standard_normal(int order);

struct MinimizeResult {
    double argmin = 0.0;
    double value = 0.0;
    int evaluations = 0;
};

/// Brent minimization on [lo, hi] with golden-section fallback.
/// Iteration cap 200. Throws if an evaluation is non-finite.
MinimizeResult minimize_1d(const std::function<double(double)>& f, double lo,
                           double hi, double tol = 1e-10);

}  // namespace rfcurves
