#include "rfcurves/simulator.hpp"

#include <atomic>
#include <limits>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "rfcurves/numerics.hpp"

namespace rfcurves {

ActivationSpec ActivationSpec::tanh_act() {
    return {ActivationKind::Tanh, nullptr, "tanh"};
}

ActivationSpec ActivationSpec::erf_act() {
    return {ActivationKind::Erf, nullptr, "erf"};
}

ActivationSpec ActivationSpec::identity() {
    return {ActivationKind::Identity, nullptr, "identity"};
}

ActivationSpec ActivationSpec::custom(std::function<double(double)> fn,
                                      std::string label) {
    ActivationSpec a;
    a.kind = ActivationKind::Custom;
    a.fn = std::move(fn);
    a.label = std::move(label);
    return a;
}

double ActivationSpec::operator()(double x) const {
    switch (kind) {
        case ActivationKind::Tanh:
            return std::tanh(x);
        case ActivationKind::Erf:
            return std::erf(x);
        case ActivationKind::Identity:
            return x;
        case ActivationKind::Custom:
            return fn(x);
    }
    throw std::logic_error("ActivationSpec: unknown kind");
}

void ActivationSpec::check_odd() const {
    if (kind == ActivationKind::Custom && !fn) {
        throw std::invalid_argument("ActivationSpec: custom activation without function");
    }
    for (int k = 0; k <= 40; ++k) {
        const double x = 0.1 + 0.2 * k;
        const double s = (*this)(x);
        if (std::abs((*this)(-x) + s) > 1e-10 * (1.0 + std::abs(s))) {
            throw std::invalid_argument("ActivationSpec: activation must be odd");
        }
    }
}

void ExperimentConfig::validate() const {
    if (n <= 0 || m <= 0 || d <= 0) {
        throw std::invalid_argument("ExperimentConfig: n, m, d must be positive");
    }
    if (sigma_eps2 < 0) {
        throw std::invalid_argument("ExperimentConfig: sigma_eps2 must be >= 0");
    }
    if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
    if (test_size < 0) throw std::invalid_argument("ExperimentConfig: test_size < 0");
    signal.validate();
    activation.check_odd();
}

std::pair<double, double> activation_constants(const ActivationSpec& activation,
                                               int quad_order) {
    activation.check_odd();
    const QuadratureRule rule = gauss_hermite_standard_normal(quad_order);
    double rho1 = 0.0, second = 0.0;
    for (int i = 0; i < rule.order; ++i) {
        const double a = rule.nodes[i];
        const double s = activation(a);
        rho1 += rule.weights[i] * a * s;
        second += rule.weights[i] * s * s;
    }
    const double rho_star2 = second - rho1 * rho1;
    if (rho_star2 < -1e-12) {
        throw std::runtime_error("activation_constants: negative residual variance");
    }
    return {rho1, std::max(0.0, rho_star2)};
}

namespace {

Eigen::MatrixXd standard_normal_matrix(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd out(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) out(i, j) = normal(rng);
    }
    return out;
}

Eigen::MatrixXd apply_activation(const ActivationSpec& act, Eigen::MatrixXd pre) {
    for (int i = 0; i < pre.rows(); ++i) {
        for (int j = 0; j < pre.cols(); ++j) pre(i, j) = act(pre(i, j));
    }
    return pre;
}

Eigen::VectorXd compose_theta_star(const SignalSpec& signal, int m) {
    Eigen::VectorXd theta(m);
    int idx = 0;
    for (std::size_t k = 0; k < signal.atoms.size(); ++k) {
        const auto& [value, weight] = signal.atoms[k];
        int count = static_cast<int>(std::ceil(m * weight));
        if (k + 1 == signal.atoms.size()) count = m - idx;
        count = std::min(count, m - idx);
        for (int i = 0; i < count; ++i) theta(idx++) = value;
    }
    while (idx < m) theta(idx++) = signal.atoms.back().first;
    return theta;
}

}  // namespace

Dataset generate_dataset(const ExperimentConfig& cfg, int trial_index) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(trial_index));
    Dataset data;
    data.W = standard_normal_matrix(cfg.m, cfg.d, rng);
    data.Z = standard_normal_matrix(cfg.n, cfg.d, rng);
    data.X = apply_activation(cfg.activation,
                              data.Z * data.W.transpose() / std::sqrt(double(cfg.d)));
    data.theta_star = compose_theta_star(cfg.signal, cfg.m);
    const double sigma = std::sqrt(cfg.sigma_eps2);
    std::normal_distribution<double> normal(0.0, 1.0);
    data.eps.resize(cfg.n);
    for (int i = 0; i < cfg.n; ++i) data.eps(i) = sigma * normal(rng);
    data.y = data.X * data.theta_star / std::sqrt(double(cfg.m)) + data.eps;
    return data;
}

Eigen::MatrixXd surrogate_features(const Eigen::MatrixXd& W, const Eigen::MatrixXd& Z,
                                   double rho1, double rho_star2,
                                   std::mt19937_64& rng) {
    if (W.cols() != Z.cols()) {
        throw std::invalid_argument("surrogate_features: dimension mismatch");
    }
    const double d = static_cast<double>(W.cols());
    Eigen::MatrixXd out = (rho1 / std::sqrt(d)) * (Z * W.transpose());
    if (rho_star2 > 0) {
        const double rho_star = std::sqrt(rho_star2);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int i = 0; i < out.rows(); ++i) {
            for (int j = 0; j < out.cols(); ++j) out(i, j) += rho_star * normal(rng);
        }
    }
    return out;
}

namespace {

double spectral_norm_squared(const Eigen::MatrixXd& X) {
    const int m = static_cast<int>(X.cols());
    Eigen::VectorXd v = Eigen::VectorXd::Ones(m) / std::sqrt(double(m));
    double prev = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
        Eigen::VectorXd w = X.transpose() * (X * v);
        const double norm = w.norm();
        if (!(norm > 0)) return 0.0;
        v = w / norm;
        if (std::abs(norm - prev) <= 1e-10 * std::max(1.0, norm)) return norm;
        prev = norm;
    }
    return prev;
}

Eigen::VectorXd soft_threshold_vec(const Eigen::VectorXd& y, double threshold) {
    Eigen::VectorXd out(y.size());
    for (int i = 0; i < y.size(); ++i) {
        const double v = y(i);
        out(i) = (v > threshold) ? v - threshold : (v < -threshold ? v + threshold : 0.0);
    }
    return out;
}

}  // namespace

FitResult fit_elastic_net(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double lambda, double alpha, double tol, int max_iter) {
    if (lambda < 0 || alpha < 0) {
        throw std::invalid_argument("fit_elastic_net: negative regularization");
    }
    const int n = static_cast<int>(X.rows());
    const int m = static_cast<int>(X.cols());
    if (y.size() != n) throw std::invalid_argument("fit_elastic_net: shape mismatch");
    if (lambda == 0 && alpha == 0 && n < m) {
        throw std::invalid_argument(
            "fit_elastic_net: unregularized underdetermined system is ill-posed");
    }
    const double sqrt_m = std::sqrt(double(m));

    auto smooth_grad = [&](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
        return X.transpose() * (X * theta / sqrt_m - y) / (n * sqrt_m) +
               (alpha / m) * theta;
    };
    auto smooth_value = [&](const Eigen::VectorXd& theta) {
        return (y - X * theta / sqrt_m).squaredNorm() / (2.0 * n) +
               0.5 * (alpha / m) * theta.squaredNorm();
    };

    double L = spectral_norm_squared(X) / (double(n) * m) + alpha / m;
    if (!(L > 0)) L = 1.0;

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd momentum = theta;
    double t_k = 1.0;
    double residual = std::numeric_limits<double>::infinity();

    for (int iter = 1; iter <= max_iter; ++iter) {
        const Eigen::VectorXd grad = smooth_grad(momentum);
        const double f_momentum = smooth_value(momentum);
        Eigen::VectorXd next;
        // Backtracking guards against a power-iteration underestimate of L.
        for (int back = 0;; ++back) {
            next = soft_threshold_vec(momentum - grad / L, lambda / (m * L));
            const Eigen::VectorXd diff = next - momentum;
            const double upper =
                f_momentum + grad.dot(diff) + 0.5 * L * diff.squaredNorm();
            if (smooth_value(next) <= upper + 1e-15 * std::abs(upper) || back >= 60) break;
            L *= 2.0;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_k * t_k));
        Eigen::VectorXd step = next - theta;
        if ((momentum - next).dot(step) > 0) {
            // Adaptive restart: momentum points uphill, drop it.
            t_k = 1.0;
            momentum = next;
        } else {
            momentum = next + ((t_k - 1.0) / t_next) * step;
            t_k = t_next;
        }
        theta = next;

        const Eigen::VectorXd fixed_point =
            soft_threshold_vec(theta - smooth_grad(theta) / L, lambda / (m * L));
        residual = L * (theta - fixed_point).lpNorm<Eigen::Infinity>();
        if (residual <= tol) {
            return {theta, iter, residual};
        }
    }
    throw std::runtime_error("fit_elastic_net: no convergence, residual = " +
                             std::to_string(residual));
}

double empirical_train_error(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, const RegularizerSpec& reg) {
    const int n = static_cast<int>(X.rows());
    const int m = static_cast<int>(X.cols());
    double penalty = 0.0;
    for (int i = 0; i < m; ++i) penalty += reg.value(theta(i));
    return (y - X * theta / std::sqrt(double(m))).squaredNorm() / (2.0 * n) +
           penalty / m;
}

GenEstimate empirical_gen_error(const Eigen::VectorXd& theta_hat,
                                const ExperimentConfig& cfg, const Dataset& data,
                                GenMode mode, FeatureKind kind,
                                std::mt19937_64& rng) {
    const int m = cfg.m;
    const double sqrt_m = std::sqrt(double(m));
    if (mode == GenMode::SurrogateExact) {
        if (kind != FeatureKind::Surrogate) {
            throw std::invalid_argument(
                "empirical_gen_error: exact mode requires surrogate features");
        }
        const auto [rho1, rho_star2] = activation_constants(cfg.activation);
        const Eigen::VectorXd diff = theta_hat - data.theta_star;
        const Eigen::VectorXd wdiff = data.W.transpose() * diff;
        const double quad = (rho1 * rho1 / cfg.d) * wdiff.squaredNorm() +
                            rho_star2 * diff.squaredNorm();
        return {cfg.sigma_eps2 + quad / m, 0.0, false};
    }

    const int T = cfg.effective_test_size();
    Eigen::MatrixXd Ztest = standard_normal_matrix(T, cfg.d, rng);
    Eigen::MatrixXd Xtest;
    if (kind == FeatureKind::Nonlinear) {
        Xtest = apply_activation(cfg.activation,
                                 Ztest * data.W.transpose() / std::sqrt(double(cfg.d)));
    } else {
        const auto [rho1, rho_star2] = activation_constants(cfg.activation);
        Xtest = surrogate_features(data.W, Ztest, rho1, rho_star2, rng);
    }
    const double sigma = std::sqrt(cfg.sigma_eps2);
    std::normal_distribution<double> normal(0.0, 1.0);
    double sum = 0.0, sum_sq = 0.0;
    const Eigen::VectorXd pred = Xtest * theta_hat / sqrt_m;
    const Eigen::VectorXd truth = Xtest * data.theta_star / sqrt_m;
    for (int i = 0; i < T; ++i) {
        const double err = truth(i) + sigma * normal(rng) - pred(i);
        const double sq = err * err;
        sum += sq;
        sum_sq += sq * sq;
    }
    const double mean = sum / T;
    const double var = std::max(0.0, sum_sq / T - mean * mean);
    return {mean, std::sqrt(var / T), T < 100};
}

double empirical_nonzero_fraction(const Eigen::VectorXd& theta,
                                  double threshold_scale) {
    const int m = static_cast<int>(theta.size());
    if (m <= 0) throw std::invalid_argument("empirical_nonzero_fraction: empty vector");
    const double threshold = threshold_scale / std::sqrt(double(m));
    int count = 0;
    for (int i = 0; i < m; ++i) {
        if (std::abs(theta(i)) >= threshold) ++count;
    }
    return static_cast<double>(count) / m;
}

namespace {

TrialRecord run_one_trial(const ExperimentConfig& cfg, FeatureKind kind, int trial) {
    TrialRecord rec;
    rec.trial = trial;
    rec.seed = cfg.seed + static_cast<std::uint64_t>(trial);
    try {
        Dataset data = generate_dataset(cfg, trial);
        std::mt19937_64 rng(rec.seed ^ 0x9e3779b97f4a7c15ULL);
        if (kind == FeatureKind::Surrogate) {
            const auto [rho1, rho_star2] = activation_constants(cfg.activation);
            data.X = surrogate_features(data.W, data.Z, rho1, rho_star2, rng);
            data.y = data.X * data.theta_star / std::sqrt(double(cfg.m)) + data.eps;
        }
        const FitResult fit =
            fit_elastic_net(data.X, data.y, cfg.reg.lambda, cfg.reg.alpha);
        rec.iters = fit.iterations;
        rec.train = empirical_train_error(fit.theta, data.X, data.y, cfg.reg);
        const GenMode mode = (kind == FeatureKind::Surrogate) ? GenMode::SurrogateExact
                                                              : GenMode::TestSet;
        const GenEstimate gen =
            empirical_gen_error(fit.theta, cfg, data, mode, kind, rng);
        rec.gen = gen.estimate;
        rec.gen_se = gen.std_error;
        rec.nonzero = empirical_nonzero_fraction(fit.theta, cfg.zero_threshold_scale);
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    return rec;
}

void accumulate(const std::vector<double>& xs, double& mean, double& se) {
    const int k = static_cast<int>(xs.size());
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= k;
    if (k < 2) {
        se = 0.0;
        return;
    }
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    se = std::sqrt(var / (k - 1) / k);
}

}  // namespace

EmpiricalAggregate run_trials(const ExperimentConfig& cfg, FeatureKind kind,
                              int threads) {
    cfg.validate();
    if (cfg.reg.kind == RegKind::Custom) {
        throw std::invalid_argument("run_trials: custom regularizers are not simulated");
    }
    EmpiricalAggregate agg;
    agg.records.resize(cfg.trials);

    const int workers = std::max(1, std::min(threads, cfg.trials));
    std::atomic<int> next{0};
    auto work = [&]() {
        for (;;) {
            const int trial = next.fetch_add(1);
            if (trial >= cfg.trials) return;
            agg.records[trial] = run_one_trial(cfg, kind, trial);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    std::vector<double> train, gen, nonzero;
    for (const TrialRecord& rec : agg.records) {
        if (rec.failed) {
            ++agg.trials_failed;
            continue;
        }
        train.push_back(rec.train);
        gen.push_back(rec.gen);
        nonzero.push_back(rec.nonzero);
    }
    agg.trials_completed = static_cast<int>(train.size());
    if (agg.trials_failed > cfg.trials / 5) {
        throw std::runtime_error("run_trials: " + std::to_string(agg.trials_failed) +
                                 " of " + std::to_string(cfg.trials) +
                                 " trials failed");
    }
    if (agg.trials_completed == 0) {
        throw std::runtime_error("run_trials: no completed trials");
    }
    accumulate(train, agg.train_mean, agg.train_se);
    accumulate(gen, agg.gen_mean, agg.gen_se);
    accumulate(nonzero, agg.nonzero_mean, agg.nonzero_se);
    agg.se_undefined = agg.trials_completed < 2;
    return agg;
}

}  // namespace rfcurves
