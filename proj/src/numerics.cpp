#include "rfcurves/numerics.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace rfcurves {

double q_function(double x) {
    if (std::isnan(x)) {
        throw std::domain_error("q_function: NaN input");
    }
    return 0.5 * std::erfc(x / std::sqrt(2.0));
}

double std_normal_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

QuadratureRule gauss_hermite_standard_normal(int order) {
    if (order < 2 || order > 512) {
        throw std::invalid_argument("gauss_hermite_standard_normal: order must be in [2, 512]");
    }
    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
    // recurrence: off-diagonal b_k = sqrt(k), zero diagonal.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double b = std::sqrt(static_cast<double>(k));
        jacobi(k - 1, k) = b;
        jacobi(k, k - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    QuadratureRule rule;
    rule.order = order;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    double wsum = 0.0;
    for (int i = 0; i < order; ++i) {
        rule.nodes[i] = eig.eigenvalues()(i);
        const double v0 = eig.eigenvectors()(0, i);
        rule.weights[i] = v0 * v0;
        wsum += rule.weights[i];
    }
    for (double& w : rule.weights) w /= wsum;
    // Symmetrize: nodes come out of the eigensolver sorted; pair up +/-.
    for (int i = 0, j = order - 1; i < j; ++i, --j) {
        const double node = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        rule.nodes[i] = -node;
        rule.nodes[j] = node;
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    return rule;
}

namespace {

double checked_eval(const std::function<double(double)>& f, double x, int& evals) {
    const double v = f(x);
    ++evals;
    if (!std::isfinite(v)) {
        throw std::runtime_error("minimize_1d: non-finite objective value");
    }
    return v;
}

}  // namespace

MinimizeResult minimize_1d(const std::function<double(double)>& f, double lo,
                           double hi, double tol) {
    if (!(lo < hi)) {
        throw std::invalid_argument("minimize_1d: requires lo < hi");
    }
    static const double golden = 0.3819660112501051;
    int evals = 0;
    double a = lo, b = hi;
    double x = a + golden * (b - a);
    double w = x, v = x;
    double fx = checked_eval(f, x, evals);
    double fw = fx, fv = fx;
    double d = 0.0, e = 0.0;

    for (int iter = 0; iter < 200; ++iter) {
        const double xm = 0.5 * (a + b);
        const double tol1 = tol * std::abs(x) + 1e-15;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;

        bool parabolic_ok = false;
        if (std::abs(e) > tol1) {
            // Parabolic interpolation through (v, w, x).
            const double r = (x - w) * (fx - fv);
            double qq = (x - v) * (fx - fw);
            double p = (x - v) * qq - (x - w) * r;
            qq = 2.0 * (qq - r);
            if (qq > 0.0) p = -p;
            qq = std::abs(qq);
            const double etemp = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * qq * etemp) && p > qq * (a - x) &&
                p < qq * (b - x)) {
                d = p / qq;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) {
                    d = (xm >= x) ? tol1 : -tol1;
                }
                parabolic_ok = true;
            }
        }
        if (!parabolic_ok) {
            e = (x >= xm) ? a - x : b - x;
            d = golden * e;
        }
        const double u = (std::abs(d) >= tol1) ? x + d : x + ((d >= 0) ? tol1 : -tol1);
        const double fu = checked_eval(f, u, evals);
        if (fu <= fx) {
            if (u >= x) a = x; else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return {x, fx, evals};
}

}  // namespace rfcurves
