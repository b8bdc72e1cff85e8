#include "rfcurves/predictor.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "rfcurves/numerics.hpp"

namespace rfcurves {

namespace {

double tau1_fd_step(const ProblemSpec& spec) {
    return 1e-5 * std::max(1.0, spec.tau1_star());
}

double danskin_tau1_derivative(const ProblemSpec& spec, const SaddlePoint& pt,
                               int quad_order) {
    const double h = tau1_fd_step(spec);
    ProblemSpec plus = spec, minus = spec;
    plus.tau1 = spec.tau1 + h;
    minus.tau1 = spec.tau1 - h;
    const double vp = psi(pt.beta, pt.q, pt.xi, pt.t, plus, quad_order);
    const double vm = psi(pt.beta, pt.q, pt.xi, pt.t, minus, quad_order);
    return (vp - vm) / (2.0 * h);
}

double resolve_tau1_derivative(const ProblemSpec& spec, const SaddlePoint& pt,
                               const SolverOptions& opts) {
    const double h = tau1_fd_step(spec);
    ProblemSpec plus = spec, minus = spec;
    plus.tau1 = spec.tau1 + h;
    minus.tau1 = spec.tau1 - h;
    const SaddlePoint sp = solve_saddle_warm(plus, opts, pt);
    const SaddlePoint sm = solve_saddle_warm(minus, opts, pt);
    return (sp.value - sm.value) / (2.0 * h);
}

}  // namespace

double train_error(const ProblemSpec& spec, const SolverOptions& opts) {
    if (spec.tau1 != 0.0 || spec.tau2 != 0.0) {
        throw std::invalid_argument("train_error: requires tau1 = tau2 = 0");
    }
    return solve_saddle(spec, opts).value;
}

double gen_error_danskin(const ProblemSpec& spec, const SaddlePoint& saddle,
                         const SolverOptions& opts) {
    return spec.sigma_eps2 + danskin_tau1_derivative(spec, saddle, opts.quad_order);
}

double gen_error(const ProblemSpec& spec, const SolverOptions& opts) {
    const SaddlePoint pt = solve_saddle(spec, opts);
    return gen_error_danskin(spec, pt, opts);
}

double nonzero_fraction_at(const ProblemSpec& spec, const SaddlePoint& saddle) {
    const RegularizerSpec& reg = spec.reg;
    const bool has_l1 =
        (reg.kind == RegKind::Lasso || reg.kind == RegKind::ElasticNet) &&
        reg.lambda > 0;
    if (!has_l1) return 1.0;
    double fraction = 0.0;
    for (const auto& [atom, weight] : spec.signal.atoms) {
        const auto z =
            zeta_thresholds(saddle.c1, saddle.c2, spec.gamma, reg.lambda, atom);
        fraction += weight * (q_function(z.zeta1) + q_function(z.zeta2));
    }
    return fraction;
}

double nonzero_fraction(const ProblemSpec& spec, const SolverOptions& opts) {
    return nonzero_fraction_at(spec, solve_saddle(spec, opts));
}

double test_function_limit(const ProblemSpec& spec, const TestFunction& h,
                           const SolverOptions& opts) {
    const SaddlePoint pt = solve_saddle(spec, opts);
    const EnvelopeContext ctx{pt.c1, pt.c2, spec.gamma};
    return expected_prox_functional(spec.reg, ctx, spec.signal, h.value,
                                    opts.quad_order);
}

std::vector<double> theta_hat_samples(const ProblemSpec& spec,
                                      const SaddlePoint& saddle, int count,
                                      std::uint64_t seed) {
    const EnvelopeContext ctx{saddle.c1, saddle.c2, spec.gamma};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> samples;
    samples.reserve(count);
    for (int k = 0; k < count; ++k) {
        const double u = unif(rng);
        double acc = 0.0;
        double atom = spec.signal.atoms.back().first;
        for (const auto& [value, weight] : spec.signal.atoms) {
            acc += weight;
            if (u <= acc) {
                atom = value;
                break;
            }
        }
        samples.push_back(
            sample_theta_hat_coordinate(spec.reg, ctx, atom, normal(rng)));
    }
    return samples;
}

TheoryPrediction predict(const ProblemSpec& spec, const SolverOptions& opts) {
    if (spec.tau1 != 0.0 || spec.tau2 != 0.0) {
        throw std::invalid_argument("predict: requires tau1 = tau2 = 0");
    }
    TheoryPrediction out;
    out.saddle = solve_saddle(spec, opts);
    out.train_error = out.saddle.value;
    const double danskin = danskin_tau1_derivative(spec, out.saddle, opts.quad_order);
    out.gen_error = spec.sigma_eps2 + danskin;
    if (spec.reg.mu > 0) {
        const double resolved = resolve_tau1_derivative(spec, out.saddle, opts);
        out.derivative_method_gap =
            std::abs(danskin - resolved) / std::max(1.0, std::abs(danskin));
        if (out.derivative_method_gap > 1e-3) {
            throw std::runtime_error(
                "predict: Danskin vs re-solve derivative mismatch, gap = " +
                std::to_string(out.derivative_method_gap));
        }
    }
    out.nonzero_fraction = nonzero_fraction_at(spec, out.saddle);
    out.m0 = out.nonzero_fraction;
    return out;
}

}  // namespace rfcurves
