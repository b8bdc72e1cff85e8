#include "rfcurves/regularizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rfcurves/numerics.hpp"

namespace rfcurves {

RegularizerSpec RegularizerSpec::ridge(double alpha) {
    if (alpha < 0) throw std::invalid_argument("ridge: alpha must be >= 0");
    RegularizerSpec r;
    r.kind = RegKind::Ridge;
    r.alpha = alpha;
    r.mu = alpha;
    r.label = "ridge";
    return r;
}

RegularizerSpec RegularizerSpec::lasso(double lambda) {
    if (lambda < 0) throw std::invalid_argument("lasso: lambda must be >= 0");
    RegularizerSpec r;
    r.kind = RegKind::Lasso;
    r.lambda = lambda;
    r.mu = 0.0;
    r.label = "lasso";
    return r;
}

RegularizerSpec RegularizerSpec::elastic_net(double lambda, double alpha) {
    if (lambda < 0 || alpha < 0) {
        throw std::invalid_argument("elastic_net: parameters must be >= 0");
    }
    RegularizerSpec r;
    r.kind = RegKind::ElasticNet;
    r.lambda = lambda;
    r.alpha = alpha;
    r.mu = alpha;
    r.label = "elastic_net";
    return r;
}

RegularizerSpec RegularizerSpec::custom(std::function<double(double)> value, double mu,
                                        std::string label,
                                        std::function<double(double, double)> prox) {
    RegularizerSpec r;
    r.kind = RegKind::Custom;
    r.mu = mu;
    r.custom_value = std::move(value);
    r.custom_prox = std::move(prox);
    r.label = std::move(label);
    return r;
}

double RegularizerSpec::value(double x) const {
    if (kind == RegKind::Custom) return custom_value(x);
    return lambda * std::abs(x) + 0.5 * alpha * x * x;
}

SignalSpec SignalSpec::point(double value) { return SignalSpec{{{value, 1.0}}}; }

SignalSpec SignalSpec::half_ones() {
    return SignalSpec{{{0.0, 0.5}, {1.0, 0.5}}};
}

void SignalSpec::validate() const {
    if (atoms.empty()) throw std::invalid_argument("SignalSpec: no atoms");
    double sum = 0.0;
    for (const auto& [value, weight] : atoms) {
        if (!(weight > 0)) throw std::invalid_argument("SignalSpec: weights must be positive");
        if (!std::isfinite(value)) throw std::invalid_argument("SignalSpec: non-finite atom");
        sum += weight;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw std::invalid_argument("SignalSpec: weights must sum to 1");
    }
}

double EnvelopeContext::shift_scale() const {
    return c2 * std::sqrt(gamma) / (2.0 * c1);
}

namespace {

double soft_threshold(double y, double threshold) {
    if (y > threshold) return y - threshold;
    if (y < -threshold) return y + threshold;
    return 0.0;
}

double custom_prox_solve(const RegularizerSpec& reg, double step, double y) {
    if (reg.custom_prox) return reg.custom_prox(step, y);
    if (!(reg.mu > 0)) {
        throw std::invalid_argument(
            "scalar_prox: custom regularizer without prox requires mu > 0");
    }
    // Bisection on the monotone stationarity map g(x) = v'(x) + (x - y)/step,
    // with v' by centered finite differences.
    const double span = std::abs(y) + 10.0 / reg.mu;
    double lo = y - span, hi = y + span;
    auto g = [&](double x) {
        const double h = 1e-7 * (1.0 + std::abs(x));
        const double d = (reg.custom_value(x + h) - reg.custom_value(x - h)) / (2.0 * h);
        return d + (x - y) / step;
    };
    double glo = g(lo), ghi = g(hi);
    if (glo > 0 || ghi < 0) {
        throw std::runtime_error("scalar_prox: failed to bracket stationarity root");
    }
    for (int iter = 0; iter < 200 && hi - lo > 1e-12 * (1.0 + std::abs(y)); ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) <= 0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Legendre rule on [-1, 1] via Golub-Welsch; cached per node count.
const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int order) {
    static std::vector<std::pair<std::vector<double>, std::vector<double>>> cache(128);
    auto& entry = cache.at(order);
    if (!entry.first.empty()) return entry;
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        jacobi(k - 1, k) = b;
        jacobi(k, k - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    std::vector<double> nodes(order), weights(order);
    for (int i = 0; i < order; ++i) {
        nodes[i] = eig.eigenvalues()(i);
        const double v0 = eig.eigenvectors()(0, i);
        weights[i] = 2.0 * v0 * v0;
    }
    entry = {std::move(nodes), std::move(weights)};
    return entry;
}

// Integral of f(x) * pdf(x) over [-limit, limit], split at the given interior
// breakpoints so each smooth piece is handled by composite Gauss-Legendre.
double gaussian_weighted_integral(const std::function<double(double)>& f,
                                  std::vector<double> breaks, int quad_order) {
    const double limit = 14.0;
    const int nodes_per_panel = std::clamp(quad_order / 5, 8, 48);
    const auto& [gx, gw] = gauss_legendre(nodes_per_panel);

    std::vector<double> edges{-limit};
    std::sort(breaks.begin(), breaks.end());
    for (double b : breaks) {
        if (b > -limit && b < limit) edges.push_back(b);
    }
    edges.push_back(limit);

    double total = 0.0;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double lo = edges[p], hi = edges[p + 1];
        const int panels = std::max(2, static_cast<int>(std::ceil((hi - lo) / 3.5)));
        const double h = (hi - lo) / panels;
        for (int k = 0; k < panels; ++k) {
            const double a = lo + k * h;
            const double mid = a + 0.5 * h, half = 0.5 * h;
            for (int i = 0; i < nodes_per_panel; ++i) {
                const double x = mid + half * gx[i];
                total += half * gw[i] * f(x) * std_normal_pdf(x);
            }
        }
    }
    return total;
}

}  // namespace

double scalar_prox(const RegularizerSpec& reg, double step, double y) {
    if (!(step > 0)) throw std::invalid_argument("scalar_prox: step must be > 0");
    switch (reg.kind) {
        case RegKind::Ridge:
            return y / (1.0 + reg.alpha * step);
        case RegKind::Lasso:
            return soft_threshold(y, reg.lambda * step);
        case RegKind::ElasticNet: {
            const double shrink = 1.0 + reg.alpha * step;
            return soft_threshold(y / shrink, reg.lambda * step / shrink);
        }
        case RegKind::Custom:
            return custom_prox_solve(reg, step, y);
    }
    throw std::logic_error("scalar_prox: unknown kind");
}

double scalar_moreau(const RegularizerSpec& reg, double step, double y) {
    const double p = scalar_prox(reg, step, y);
    const double d = p - y;
    return reg.value(p) + d * d / (2.0 * step);
}

double expected_moreau(const RegularizerSpec& reg, const EnvelopeContext& ctx,
                       const SignalSpec& signal, int quad_order) {
    if (quad_order < 50) throw std::invalid_argument("expected_moreau: quad_order >= 50");
    if (!(ctx.c1 > 0) || !(ctx.c2 > 0) || !(ctx.gamma > 0)) {
        throw std::invalid_argument("expected_moreau: context must be strictly positive");
    }
    signal.validate();
    const double step = ctx.step();
    const double scale = ctx.shift_scale();
    double total = 0.0;
    for (const auto& [atom, weight] : signal.atoms) {
        std::vector<double> breaks;
        if ((reg.kind == RegKind::Lasso || reg.kind == RegKind::ElasticNet) &&
            reg.lambda > 0) {
            const auto z = zeta_thresholds(ctx.c1, ctx.c2, ctx.gamma, reg.lambda, atom);
            breaks = {-z.zeta1, z.zeta2};
        }
        const double a = atom;
        total += weight * gaussian_weighted_integral(
                              [&](double phi) {
                                  return scalar_moreau(reg, step, a - scale * phi);
                              },
                              std::move(breaks), quad_order);
    }
    return total;
}

double expected_moreau_closed_form(double lambda, double alpha,
                                   const EnvelopeContext& ctx,
                                   const SignalSpec& signal) {
    if (lambda < 0 || alpha < 0) {
        throw std::invalid_argument("expected_moreau_closed_form: negative parameter");
    }
    signal.validate();
    const double c1 = ctx.c1;
    const double s = ctx.shift_scale();
    const double denom = 2.0 * c1 + alpha;
    double total = 0.0;
    for (const auto& [a, weight] : signal.atoms) {
        const auto z = zeta_thresholds(c1, ctx.c2, ctx.gamma, lambda, a);
        const double q1 = q_function(z.zeta1), q2 = q_function(z.zeta2);
        const double p1 = std_normal_pdf(z.zeta1), p2 = std_normal_pdf(z.zeta2);
        const double inside = 1.0 - q1 - q2;
        const double second_moment = a * a + s * s;
        // Integrating the three prox branches against the Gaussian measure:
        // the two active branches contribute (alpha c1 y^2 +- 2 c1 lambda y
        // - lambda^2/2)/(2c1+alpha), the dead zone contributes c1 y^2.
        const double active =
            (alpha * c1 *
                 (second_moment * (q1 + q2) + (2.0 * a * s + s * s * z.zeta1) * p1 +
                  (-2.0 * a * s + s * s * z.zeta2) * p2) +
             2.0 * c1 * lambda * a * (q1 - q2) + 2.0 * c1 * lambda * s * (p1 + p2) -
             0.5 * lambda * lambda * (q1 + q2)) /
            denom;
        const double dead = c1 * (second_moment * inside -
                                  (2.0 * a * s + s * s * z.zeta1) * p1 +
                                  (2.0 * a * s - s * s * z.zeta2) * p2);
        total += weight * (active + dead);
    }
    return total;
}

double expected_prox_functional(const RegularizerSpec& reg,
                                const EnvelopeContext& ctx,
                                const SignalSpec& signal,
                                const std::function<double(double)>& f,
                                int quad_order) {
    signal.validate();
    const double step = ctx.step();
    const double scale = ctx.shift_scale();
    double total = 0.0;
    for (const auto& [atom, weight] : signal.atoms) {
        std::vector<double> breaks;
        if ((reg.kind == RegKind::Lasso || reg.kind == RegKind::ElasticNet) &&
            reg.lambda > 0) {
            const auto z = zeta_thresholds(ctx.c1, ctx.c2, ctx.gamma, reg.lambda, atom);
            breaks = {-z.zeta1, z.zeta2};
        }
        const double a = atom;
        total += weight * gaussian_weighted_integral(
                              [&](double phi) {
                                  return f(scalar_prox(reg, step, a - scale * phi));
                              },
                              std::move(breaks), quad_order);
    }
    return total;
}

ZetaPair zeta_thresholds(double c1, double c2, double gamma, double lambda,
                         double theta_star) {
    if (!(c1 > 0) || !(c2 > 0) || !(gamma > 0)) {
        throw std::invalid_argument("zeta_thresholds: c1, c2, gamma must be > 0");
    }
    const double denom = std::sqrt(gamma) * c2;
    return {(lambda - 2.0 * c1 * theta_star) / denom,
            (lambda + 2.0 * c1 * theta_star) / denom};
}

double sample_theta_hat_coordinate(const RegularizerSpec& reg,
                                   const EnvelopeContext& ctx, double theta_star,
                                   double phi) {
    return scalar_prox(reg, ctx.step(), theta_star - ctx.shift_scale() * phi);
}

}  // namespace rfcurves
