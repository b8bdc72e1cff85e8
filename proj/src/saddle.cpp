#include "rfcurves/saddle.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rfcurves/numerics.hpp"

namespace rfcurves {

ProblemSpec ProblemSpec::make(double gamma, double delta, double sigma_eps2,
                              double rho1, double rho_star2, RegularizerSpec reg,
                              SignalSpec signal) {
    ProblemSpec spec;
    spec.gamma = gamma;
    spec.delta = delta;
    spec.eta = delta / gamma;
    spec.sigma_eps2 = sigma_eps2;
    spec.rho1 = rho1;
    spec.rho_star2 = rho_star2;
    spec.reg = std::move(reg);
    spec.signal = std::move(signal);
    spec.validate();
    return spec;
}

void ProblemSpec::validate() const {
    if (!(gamma > 0) || !(eta > 0) || !(delta > 0)) {
        throw std::invalid_argument("ProblemSpec: ratios must be strictly positive");
    }
    if (std::abs(delta - gamma * eta) > 1e-12 * std::max(1.0, delta)) {
        throw std::invalid_argument("ProblemSpec: delta must equal gamma * eta");
    }
    if (sigma_eps2 < 0 || rho_star2 < 0) {
        throw std::invalid_argument("ProblemSpec: sigma_eps2 and rho_star2 must be >= 0");
    }
    if (!(rho1 * rho1 + rho_star2 > 0)) {
        throw std::invalid_argument("ProblemSpec: degenerate feature map (rho1 = rho* = 0)");
    }
    signal.validate();
}

double ProblemSpec::tau1_star() const {
    const double root = 1.0 + 2.0 * std::sqrt(delta);
    return (reg.mu / 8.0) / (rho1 * rho1 * root * root + rho_star2);
}

double ProblemSpec::tau2_star() const {
    if (!test_fn || !(test_fn->curvature_bound > 0)) return 0.0;
    return reg.mu / (4.0 * test_fn->curvature_bound);
}

RegularizerSpec effective_regularizer(const ProblemSpec& spec) {
    if (spec.tau2 == 0.0) return spec.reg;
    if (!spec.test_fn) {
        throw std::invalid_argument("effective_regularizer: tau2 != 0 without test function");
    }
    const RegularizerSpec base = spec.reg;
    const TestFunction h = *spec.test_fn;
    const double tau2 = spec.tau2;
    const double lambda = (base.kind == RegKind::Custom) ? 0.0 : base.lambda;
    const double alpha = (base.kind == RegKind::Custom) ? 0.0 : base.alpha;

    auto value = [base, h, tau2](double x) { return base.value(x) + tau2 * h.value(x); };
    auto smooth_deriv = [base, h, alpha, tau2](double x) {
        double hd;
        if (h.derivative) {
            hd = h.derivative(x);
        } else {
            const double step = 1e-7 * (1.0 + std::abs(x));
            hd = (h.value(x + step) - h.value(x - step)) / (2.0 * step);
        }
        if (base.kind == RegKind::Custom) {
            const double step = 1e-7 * (1.0 + std::abs(x));
            return (base.custom_value(x + step) - base.custom_value(x - step)) /
                       (2.0 * step) +
                   tau2 * hd;
        }
        return alpha * x + tau2 * hd;
    };
    // prox of lambda|x| + smooth(x): dead-zone test at zero, then bisection on
    // the strictly increasing stationarity map on the active side.
    auto prox = [lambda, smooth_deriv](double step, double y) {
        const double g0 = smooth_deriv(0.0) - y / step;
        if (std::abs(g0) <= lambda) return 0.0;
        const int sign = (g0 < -lambda) ? 1 : -1;
        auto g = [&](double p) {
            return smooth_deriv(p) + (p - y) / step + lambda * sign;
        };
        double lo = 0.0, hi = sign * std::max(1.0, 2.0 * std::abs(y));
        if (sign < 0) std::swap(lo, hi);
        int expand = 0;
        while (!(g(lo) <= 0 && g(hi) >= 0)) {
            lo *= 2.0;
            hi *= 2.0;
            if (++expand > 60) {
                throw std::runtime_error("effective_regularizer: prox bracket failure");
            }
        }
        for (int iter = 0; iter < 200 && hi - lo > 1e-13 * (1.0 + std::abs(y)); ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (g(mid) <= 0) lo = mid; else hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    const double mu = std::max(0.0, base.mu - std::abs(tau2) * h.curvature_bound);
    return RegularizerSpec::custom(value, mu, "effective", prox);
}

std::pair<double, double> coupling_constants(double beta, double q, double xi,
                                             double t, const ProblemSpec& spec) {
    if (!(beta > 0) || !(q > 0) || !(xi > 0) || !(t > 0)) {
        throw std::domain_error("coupling_constants: coordinates must be > 0");
    }
    const double bp = beta + 2.0 * spec.tau1 * q;
    if (!(bp > 0)) {
        throw std::domain_error("coupling_constants: beta + 2 q tau1 <= 0");
    }
    const double r1sq = spec.rho1 * spec.rho1;
    const double c1 = bp * bp * r1sq * xi / (2.0 * q * q * t) +
                      bp * spec.rho_star2 / (2.0 * q);
    const double c2 = std::sqrt(bp * bp * r1sq * xi * xi * spec.eta / (q * q) +
                                beta * beta * spec.rho_star2);
    return {c1, c2};
}

double psi(double beta, double q, double xi, double t, const ProblemSpec& spec,
           int quad_order, EnvelopePath path) {
    const auto [c1, c2] = coupling_constants(beta, q, xi, t, spec);
    const EnvelopeContext ctx{c1, c2, spec.gamma};

    double envelope;
    const bool closed_form_ok =
        spec.tau2 == 0.0 && spec.reg.kind != RegKind::Custom;
    if (path == EnvelopePath::ClosedForm && !closed_form_ok) {
        throw std::invalid_argument("psi: closed form unavailable for this spec");
    }
    if (closed_form_ok && path != EnvelopePath::Quadrature) {
        envelope = expected_moreau_closed_form(spec.reg.lambda, spec.reg.alpha, ctx,
                                               spec.signal);
    } else {
        envelope = expected_moreau(effective_regularizer(spec), ctx, spec.signal,
                                   quad_order);
    }

    const double bp = beta + 2.0 * spec.tau1 * q;
    const double value = envelope - c2 * c2 * spec.gamma / (4.0 * c1) +
                         0.5 * xi * t + 0.5 * beta * q +
                         beta * spec.sigma_eps2 / (2.0 * q) +
                         xi * beta * beta / (2.0 * t * spec.eta) -
                         bp * xi * xi / (2.0 * q) -
                         q * beta * beta / (2.0 * bp * spec.eta) -
                         0.5 * beta * beta;
    if (!std::isfinite(value)) {
        throw std::runtime_error("psi: non-finite value");
    }
    return value;
}

namespace {

using Coord = std::array<double, 4>;

constexpr double kInvalid = std::numeric_limits<double>::quiet_NaN();

double safe_psi(const Coord& x, const ProblemSpec& spec, int quad_order) {
    try {
        return psi(x[0], x[1], x[2], x[3], spec, quad_order);
    } catch (const std::exception&) {
        return kInvalid;
    }
}

Coord fd_gradient(const Coord& x, const ProblemSpec& spec, int quad_order,
                  double rel_step = 1e-6) {
    Coord g{};
    for (int i = 0; i < 4; ++i) {
        const double h = rel_step * x[i];
        Coord xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (psi(xp[0], xp[1], xp[2], xp[3], spec, quad_order) -
                psi(xm[0], xm[1], xm[2], xm[3], spec, quad_order)) /
               (2.0 * h);
    }
    return g;
}

double scaled_residual(const Coord& x, const ProblemSpec& spec, int quad_order) {
    const double value = psi(x[0], x[1], x[2], x[3], spec, quad_order);
    const Coord g = fd_gradient(x, spec, quad_order);
    double res = 0.0;
    for (double gi : g) res = std::max(res, std::abs(gi));
    return res / std::max(1.0, std::abs(value));
}

// One full nested scan over the current log-space boxes. Returns the
// incumbent indices and value following the max-min-max-min order.
struct ScanResult {
    std::array<int, 4> idx{};
    double value = 0.0;
    bool ok = false;
};

ScanResult nested_scan(const std::array<std::vector<double>, 4>& grids,
                       const ProblemSpec& spec, int quad_order) {
    const auto& betas = grids[0];
    const auto& qs = grids[1];
    const auto& xis = grids[2];
    const auto& ts = grids[3];
    ScanResult best;
    double outer = -std::numeric_limits<double>::infinity();
    for (std::size_t ib = 0; ib < betas.size(); ++ib) {
        double vq = std::numeric_limits<double>::infinity();
        std::array<int, 3> arg_q{-1, -1, -1};
        for (std::size_t iq = 0; iq < qs.size(); ++iq) {
            double vx = -std::numeric_limits<double>::infinity();
            std::array<int, 2> arg_x{-1, -1};
            for (std::size_t ix = 0; ix < xis.size(); ++ix) {
                double vt = std::numeric_limits<double>::infinity();
                int arg_t = -1;
                for (std::size_t it = 0; it < ts.size(); ++it) {
                    const double v = safe_psi({betas[ib], qs[iq], xis[ix], ts[it]},
                                              spec, quad_order);
                    if (std::isfinite(v) && v < vt) {
                        vt = v;
                        arg_t = static_cast<int>(it);
                    }
                }
                if (arg_t >= 0 && vt > vx) {
                    vx = vt;
                    arg_x = {static_cast<int>(ix), arg_t};
                }
            }
            if (arg_x[0] >= 0 && vx < vq) {
                vq = vx;
                arg_q = {static_cast<int>(iq), arg_x[0], arg_x[1]};
            }
        }
        if (arg_q[0] >= 0 && vq > outer) {
            outer = vq;
            best.idx = {static_cast<int>(ib), arg_q[0], arg_q[1], arg_q[2]};
            best.value = vq;
            best.ok = true;
        }
    }
    return best;
}

// Finite-difference Newton on the stationarity system grad psi = 0.
bool newton_polish(Coord& x, const ProblemSpec& spec, int quad_order,
                   double grad_tol) {
    auto res_norm = [&](const Coord& p) {
        const Coord g = fd_gradient(p, spec, quad_order);
        double r = 0.0;
        for (double gi : g) r = std::max(r, std::abs(gi));
        return r;
    };
    double current = res_norm(x);
    for (int iter = 0; iter < 40; ++iter) {
        if (current <= 0.1 * grad_tol) return true;
        const Coord g = fd_gradient(x, spec, quad_order);
        Eigen::Matrix4d hess;
        for (int j = 0; j < 4; ++j) {
            const double h = 1e-5 * x[j];
            Coord xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const Coord gp = fd_gradient(xp, spec, quad_order);
            const Coord gm = fd_gradient(xm, spec, quad_order);
            for (int i = 0; i < 4; ++i) hess(i, j) = (gp[i] - gm[i]) / (2.0 * h);
        }
        Eigen::Vector4d rhs(g[0], g[1], g[2], g[3]);
        const Eigen::Vector4d dx = hess.fullPivLu().solve(rhs);
        if (!dx.allFinite()) return false;
        double step = 1.0;
        bool accepted = false;
        for (int back = 0; back < 12; ++back) {
            Coord trial = x;
            bool positive = true;
            for (int i = 0; i < 4; ++i) {
                trial[i] = x[i] - step * dx(i);
                if (!(trial[i] > 0)) positive = false;
            }
            if (positive) {
                double trial_res;
                try {
                    trial_res = res_norm(trial);
                } catch (const std::exception&) {
                    trial_res = std::numeric_limits<double>::infinity();
                }
                if (trial_res < current) {
                    x = trial;
                    current = trial_res;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) return current <= grad_tol;
    }
    return true;
}

SaddlePoint solve_saddle_impl(const ProblemSpec& spec, const SolverOptions& opts) {
    spec.validate();
    const int n = opts.grid_points;
    const double q_floor = 1e-8;

    std::array<double, 4> lo_log{std::log(1e-6),
                                 std::log(std::max(std::sqrt(spec.sigma_eps2), 1e-6) * 0.5),
                                 std::log(1e-6), std::log(1e-6)};
    std::array<double, 4> hi_log{std::log(10.0), std::log(10.0), std::log(10.0),
                                 std::log(10.0)};
    std::array<int, 4> expansions{};
    Coord incumbent{};
    double incumbent_value = 0.0;
    bool have_incumbent = false;
    bool q_floor_hit = false;

    for (int round = 0; round < opts.max_rounds; ++round) {
        std::array<std::vector<double>, 4> grids;
        for (int i = 0; i < 4; ++i) {
            grids[i].resize(n);
            for (int k = 0; k < n; ++k) {
                grids[i][k] =
                    std::exp(lo_log[i] + (hi_log[i] - lo_log[i]) * k / (n - 1));
            }
        }
        const ScanResult scan = nested_scan(grids, spec, opts.quad_order);
        if (!scan.ok) {
            throw std::runtime_error("solve_saddle: no feasible grid point");
        }
        for (int i = 0; i < 4; ++i) incumbent[i] = grids[i][scan.idx[i]];
        incumbent_value = scan.value;
        have_incumbent = true;

        // Converged boxes first: at precision-scale widths the argmax indices
        // are tie-breaking noise and must not feed the expansion logic.
        double max_width = 0.0;
        for (int i = 0; i < 4; ++i) {
            max_width = std::max(max_width, hi_log[i] - lo_log[i]);
        }
        if (max_width <= opts.param_tol) break;

        for (int i = 0; i < 4; ++i) {
            const double width = hi_log[i] - lo_log[i];
            const double center = std::log(incumbent[i]);
            if (width <= opts.param_tol) continue;  // frozen, ties are noise
            const bool at_lower = scan.idx[i] == 0;
            const bool at_upper = scan.idx[i] == n - 1;
            // Boundary hits trigger expansion only up to a cap; past it the
            // direction is treated as flat and the box shrinks around the
            // boundary point, leaving the final residual check to judge the
            // solve. Consecutive hits count; interior hits reset the counter.
            const bool may_expand = expansions[i] < opts.max_expansions;
            if (at_lower && may_expand &&
                !(i == 1 && lo_log[i] <= std::log(q_floor) + 1e-12)) {
                ++expansions[i];
                lo_log[i] -= width;
                if (i == 1) lo_log[i] = std::max(lo_log[i], std::log(q_floor));
            } else if (at_upper && may_expand) {
                ++expansions[i];
                hi_log[i] += width;
            } else {
                if (at_lower && i == 1 &&
                    lo_log[i] <= std::log(q_floor) + 1e-12) {
                    q_floor_hit = true;
                }
                if (!at_lower && !at_upper) expansions[i] = 0;
                const double half_width = width / (2.0 * opts.shrink);
                lo_log[i] = center - half_width;
                hi_log[i] = center + half_width;
                if (i == 1) lo_log[i] = std::max(lo_log[i], std::log(q_floor));
            }
        }
    }
    if (!have_incumbent) {
        throw std::runtime_error("solve_saddle: grid search produced no incumbent");
    }

    Coord point = incumbent;
    newton_polish(point, spec, opts.quad_order, opts.grad_tol);

    // Cyclic 1-D polish as a backstop when Newton stalls away from the root.
    double residual = scaled_residual(point, spec, opts.quad_order);
    if (residual > opts.grad_tol) {
        for (int cycle = 0; cycle < opts.polish_rounds && residual > opts.grad_tol;
             ++cycle) {
            for (int i = 0; i < 4; ++i) {
                const bool maximize = (i == 0 || i == 2);
                Coord trial = point;
                auto line = [&](double v) {
                    trial[i] = v;
                    const double value = safe_psi(trial, spec, opts.quad_order);
                    if (std::isnan(value)) return std::numeric_limits<double>::infinity();
                    return maximize ? -value : value;
                };
                const auto r =
                    minimize_1d(line, point[i] * 0.5, point[i] * 2.0, 1e-12);
                point[i] = r.argmin;
            }
            newton_polish(point, spec, opts.quad_order, opts.grad_tol);
            residual = scaled_residual(point, spec, opts.quad_order);
        }
        if (residual > opts.grad_tol) {
            throw std::runtime_error(
                "solve_saddle: failed to reach gradient tolerance, residual = " +
                std::to_string(residual));
        }
    }

    SaddlePoint pt;
    pt.beta = point[0];
    pt.q = point[1];
    pt.xi = point[2];
    pt.t = point[3];
    const auto [c1, c2] = coupling_constants(pt.beta, pt.q, pt.xi, pt.t, spec);
    pt.c1 = c1;
    pt.c2 = c2;
    pt.value = psi(pt.beta, pt.q, pt.xi, pt.t, spec, opts.quad_order);
    pt.residual = scaled_residual(point, spec, opts.quad_order);
    pt.q_floor_warning = q_floor_hit;
    (void)incumbent_value;
    return pt;
}

}  // namespace

SaddlePoint solve_saddle(const ProblemSpec& spec, const SolverOptions& opts) {
    try {
        return solve_saddle_impl(spec, opts);
    } catch (const std::runtime_error&) {
        // A coarse grid can settle into the wrong basin on nearly flat
        // objectives; retry once with a denser scan and gentler shrink
        // before giving up.
        SolverOptions fine = opts;
        fine.grid_points = std::max(opts.grid_points + 6, 21);
        fine.shrink = std::min(opts.shrink, 2.0);
        return solve_saddle_impl(spec, fine);
    }
}

SaddlePoint solve_saddle_warm(const ProblemSpec& spec, const SolverOptions& opts,
                              const SaddlePoint& warm) {
    Coord point{warm.beta, warm.q, warm.xi, warm.t};
    const bool ok = newton_polish(point, spec, opts.quad_order, opts.grad_tol);
    double residual = ok ? scaled_residual(point, spec, opts.quad_order)
                         : std::numeric_limits<double>::infinity();
    if (residual > opts.grad_tol) {
        return solve_saddle(spec, opts);
    }
    SaddlePoint pt;
    pt.beta = point[0];
    pt.q = point[1];
    pt.xi = point[2];
    pt.t = point[3];
    const auto [c1, c2] = coupling_constants(pt.beta, pt.q, pt.xi, pt.t, spec);
    pt.c1 = c1;
    pt.c2 = c2;
    pt.value = psi(pt.beta, pt.q, pt.xi, pt.t, spec, opts.quad_order);
    pt.residual = residual;
    return pt;
}

double stationarity_residual(const SaddlePoint& pt, const ProblemSpec& spec,
                             int quad_order) {
    if (!(pt.beta > 0) || !(pt.q > 0) || !(pt.xi > 0) || !(pt.t > 0)) {
        throw std::invalid_argument("stationarity_residual: coordinates must be > 0");
    }
    return scaled_residual({pt.beta, pt.q, pt.xi, pt.t}, spec, quad_order);
}

}  // namespace rfcurves
