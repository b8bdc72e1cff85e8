#pragma once

#include <functional>
#include <optional>
#include <string>

#include "rfcurves/regularizer.hpp"

namespace rfcurves {

/// Smooth scalar test function with a declared curvature (second derivative)
/// bound, entering the objective as (tau2/m) * sum_i value(theta_i).
struct TestFunction {
    std::function<double(double)> value;
    std::function<double(double)> derivative;  // optional, FD fallback
    double curvature_bound = 0.0;
};

/// Asymptotic problem instance. Ratios follow gamma = m/n, eta = n/d,
/// delta = gamma * eta = m/d.
struct ProblemSpec {
    double gamma = 1.0;
    double eta = 1.0;
    double delta = 1.0;
    double sigma_eps2 = 0.0;
    double rho1 = 1.0;
    double rho_star2 = 0.0;
    RegularizerSpec reg;
    SignalSpec signal;
    double tau1 = 0.0;
    double tau2 = 0.0;
    std::optional<TestFunction> test_fn;

    static ProblemSpec make(double gamma, double delta, double sigma_eps2,
                            double rho1, double rho_star2, RegularizerSpec reg,
                            SignalSpec signal);
    void validate() const;

    /// Largest |tau1| keeping the perturbed problem strongly convex.
    double tau1_star() const;
    /// Largest |tau2|; requires a test function with a curvature bound.
    double tau2_star() const;
};

struct SaddlePoint {
    double beta = 0.0;
    double q = 0.0;
    double xi = 0.0;
    double t = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double value = 0.0;
    double residual = 0.0;
    bool q_floor_warning = false;
};

struct SolverOptions {
    int grid_points = 15;
    double shrink = 3.0;
    double param_tol = 1e-7;
    double grad_tol = 1e-7;
    int max_rounds = 60;
    int quad_order = 200;
    int polish_rounds = 5;
    int max_expansions = 12;
};

enum class EnvelopePath { Auto, ClosedForm, Quadrature };

/// c1, c2 of the scalarized objective at the given coordinates.
std::pair<double, double> coupling_constants(double beta, double q, double xi,
                                             double t, const ProblemSpec& spec);

/// The four-variable scalar objective whose max-min-max-min value gives the
/// asymptotic training error.
double psi(double beta, double q, double xi, double t, const ProblemSpec& spec,
           int quad_order = 200, EnvelopePath path = EnvelopePath::Auto);

/// Nested refining grid search (max over beta, min over q, max over xi,
/// min over t) followed by cyclic polish and finite-difference Newton on the
/// stationarity system.
SaddlePoint solve_saddle(const ProblemSpec& spec, const SolverOptions& opts = {});

/// Re-solve starting from a previously solved point (used by the
/// finite-difference derivative cross-checks). Newton on the stationarity
/// system from the warm center, with a narrow grid fallback.
SaddlePoint solve_saddle_warm(const ProblemSpec& spec, const SolverOptions& opts,
                              const SaddlePoint& warm);

/// Scaled max-norm of the centered finite-difference gradient of psi.
double stationarity_residual(const SaddlePoint& pt, const ProblemSpec& spec,
                             int quad_order = 200);

/// Effective scalar regularizer r + tau2 * h used inside the envelope.
RegularizerSpec effective_regularizer(const ProblemSpec& spec);

}  // namespace rfcurves
