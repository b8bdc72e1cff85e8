#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace rfcurves {

enum class RegKind { Ridge, Lasso, ElasticNet, Custom };

/// Separable regularizer r(theta) = sum_i rbar(theta_i).
/// Builtin kinds carry rbar(x) = lambda|x| + (alpha/2) x^2 with the
/// appropriate coefficient zeroed. Custom kinds carry an explicit scalar
/// value function and optionally a scalar prox; mu is the declared
/// strong-convexity modulus.
struct RegularizerSpec {
    RegKind kind = RegKind::ElasticNet;
    double lambda = 0.0;
    double alpha = 0.0;
    double mu = 0.0;
    std::function<double(double)> custom_value;
    std::function<double(double, double)> custom_prox;  // (step, y) -> argmin
    std::string label;

    static RegularizerSpec ridge(double alpha);
    static RegularizerSpec lasso(double lambda);
    static RegularizerSpec elastic_net(double lambda, double alpha);
    static RegularizerSpec custom(std::function<double(double)> value, double mu,
                                  std::string label = "custom",
                                  std::function<double(double, double)> prox = nullptr);

    /// Scalar penalty value rbar(x).
    double value(double x) const;
};

/// Distribution of true-model coordinates as a finite atom mixture.
struct SignalSpec {
    std::vector<std::pair<double, double>> atoms;  // (value, weight)

    static SignalSpec point(double value);
    static SignalSpec half_ones();  // {0: 0.5, 1: 0.5}
    void validate() const;
};

/// Constants entering the Moreau expectation: step 1/(2 c1) and Gaussian
/// shift scale c2 sqrt(gamma) / (2 c1).
struct EnvelopeContext {
    double c1 = 1.0;
    double c2 = 1.0;
    double gamma = 1.0;

    double step() const { return 1.0 / (2.0 * c1); }
    double shift_scale() const;
};

struct ZetaPair {
    double zeta1 = 0.0;
    double zeta2 = 0.0;
};

/// prox_{step * rbar}(y) = argmin_x rbar(x) + (x - y)^2 / (2 step).
double scalar_prox(const RegularizerSpec& reg, double step, double y);

/// Moreau envelope value rbar(p) + (p - y)^2 / (2 step), p = scalar_prox.
double scalar_moreau(const RegularizerSpec& reg, double step, double y);

/// E_phi[ M_{rbar/(2c1)}(a - shift_scale * phi) ] averaged over signal atoms.
/// The integral is split at the prox kink locations (when known) so the
/// result is a high-accuracy oracle rather than a raw Gauss-Hermite sum.
double expected_moreau(const RegularizerSpec& reg, const EnvelopeContext& ctx,
                       const SignalSpec& signal, int quad_order = 200);

/// Closed-form elastic-net expectation of the Moreau envelope.
double expected_moreau_closed_form(double lambda, double alpha,
                                   const EnvelopeContext& ctx,
                                   const SignalSpec& signal);

/// Soft-threshold boundaries of the dead zone in phi:
/// zeta1 = (lambda - 2 c1 theta*) / (sqrt(gamma) c2),
/// zeta2 = (lambda + 2 c1 theta*) / (sqrt(gamma) c2).
ZetaPair zeta_thresholds(double c1, double c2, double gamma, double lambda,
                         double theta_star);

/// One coordinate of the asymptotic solution:
/// prox_{rbar/(2c1)}(theta* - shift_scale * phi).
double sample_theta_hat_coordinate(const RegularizerSpec& reg,
                                   const EnvelopeContext& ctx, double theta_star,
                                   double phi);

/// E_phi[ f(prox coordinate) ] averaged over signal atoms, with the same
/// kink-aware integration used by expected_moreau.
double expected_prox_functional(const RegularizerSpec& reg,
                                const EnvelopeContext& ctx,
                                const SignalSpec& signal,
                                const std::function<double(double)>& f,
                                int quad_order = 200);

}  // namespace rfcurves
