#pragma once

#include <cstdint>
#include <vector>

#include "rfcurves/saddle.hpp"

namespace rfcurves {

struct TheoryPrediction {
    double train_error = 0.0;
    double gen_error = 0.0;
    double nonzero_fraction = 1.0;
    double m0 = 1.0;
    double derivative_method_gap = 0.0;
    SaddlePoint saddle;
};

/// Asymptotic training error: the saddle value at tau1 = tau2 = 0.
double train_error(const ProblemSpec& spec, const SolverOptions& opts = {});

/// sigma_eps2 + d/d tau1 of the saddle value at zero. Computed by envelope
/// (Danskin) differentiation at the frozen saddle point; for mu > 0 a full
/// warm-started re-solve cross-checks the derivative and the relative gap is
/// reported through predict().
double gen_error(const ProblemSpec& spec, const SolverOptions& opts = {});

/// Asymptotic fraction of nonzero solution coordinates,
/// sum_atoms w [Q(zeta1) + Q(zeta2)]. Returns 1 when there is no l1 part.
double nonzero_fraction(const ProblemSpec& spec, const SolverOptions& opts = {});

/// Asymptotic limit of (1/m) sum_i h(theta_i) at the solution, evaluated at
/// the frozen saddle point by quadrature over the prox coordinates.
double test_function_limit(const ProblemSpec& spec, const TestFunction& h,
                           const SolverOptions& opts = {});

/// i.i.d. draws of solution coordinates: atom by weight, phi ~ N(0,1), prox.
std::vector<double> theta_hat_samples(const ProblemSpec& spec,
                                      const SaddlePoint& saddle, int count,
                                      std::uint64_t seed);

/// All observables from a single solve (plus derivative re-solves).
TheoryPrediction predict(const ProblemSpec& spec, const SolverOptions& opts = {});

/// Variants reusing a pre-solved saddle point.
double nonzero_fraction_at(const ProblemSpec& spec, const SaddlePoint& saddle);
double gen_error_danskin(const ProblemSpec& spec, const SaddlePoint& saddle,
                         const SolverOptions& opts = {});

}  // namespace rfcurves
