#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "rfcurves/simulator.hpp"

using namespace rfcurves;

namespace {

double objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& theta, double lambda, double alpha) {
    const int n = static_cast<int>(X.rows());
    const int m = static_cast<int>(X.cols());
    return (y - X * theta / std::sqrt(double(m))).squaredNorm() / (2.0 * n) +
           (lambda / m) * theta.lpNorm<1>() +
           0.5 * (alpha / m) * theta.squaredNorm();
}

// Independent oracle: cyclic proximal coordinate descent on the same
// objective, run to a much tighter coordinate tolerance than FISTA's
// residual target.
Eigen::VectorXd coordinate_descent(const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& y, double lambda,
                                   double alpha, int sweeps = 20000) {
    const int n = static_cast<int>(X.rows());
    const int m = static_cast<int>(X.cols());
    const double sqrt_m = std::sqrt(double(m));
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd residual = y;
    std::vector<double> col_sq(m);
    for (int j = 0; j < m; ++j) col_sq[j] = X.col(j).squaredNorm();
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        double max_change = 0.0;
        for (int j = 0; j < m; ++j) {
            const double a = col_sq[j] / (double(n) * m) + alpha / m;
            const double b =
                X.col(j).dot(residual) / (n * sqrt_m) + col_sq[j] * theta(j) /
                                                            (double(n) * m);
            const double thresh = lambda / m;
            double next = 0.0;
            if (b > thresh) next = (b - thresh) / a;
            else if (b < -thresh) next = (b + thresh) / a;
            const double change = next - theta(j);
            if (change != 0.0) {
                residual -= X.col(j) * (change / sqrt_m);
                theta(j) = next;
                max_change = std::max(max_change, std::abs(change));
            }
        }
        if (max_change <= 1e-13) break;
    }
    return theta;
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd out(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) out(i, j) = normal(rng);
    }
    return out;
}

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.n = 120;
    cfg.m = 60;
    cfg.d = 60;
    cfg.sigma_eps2 = 0.1;
    cfg.reg = RegularizerSpec::elastic_net(1e-3, 1e-2);
    cfg.signal = SignalSpec::half_ones();
    cfg.activation = ActivationSpec::tanh_act();
    cfg.seed = 2024;
    cfg.trials = 4;
    return cfg;
}

}  // namespace

TEST_CASE("activation constants") {
    CHECK(activation_constants(ActivationSpec::identity()).first ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(activation_constants(ActivationSpec::identity()).second ==
          doctest::Approx(0.0).epsilon(1e-12));
    const auto cubic = ActivationSpec::custom([](double x) { return x * x * x; },
                                              "cubic");
    CHECK(activation_constants(cubic).first == doctest::Approx(3.0).epsilon(1e-10));
    const auto [rho1, rho_star2] = activation_constants(ActivationSpec::tanh_act());
    // Frozen 400-node quadrature fixtures.
    CHECK(rho1 == doctest::Approx(0.60570550960215883).epsilon(1e-11));
    CHECK(rho_star2 == doctest::Approx(0.027415326035430257).epsilon(1e-9));
    const auto even = ActivationSpec::custom([](double x) { return x * x; }, "even");
    CHECK_THROWS(activation_constants(even));
}

TEST_CASE("dataset generation") {
    ExperimentConfig cfg = small_config();
    cfg.m = 10;
    cfg.d = 30;
    const Dataset data = generate_dataset(cfg, 0);
    SUBCASE("half ones composition") {
        int ones = 0;
        for (int i = 0; i < cfg.m; ++i) {
            if (data.theta_star(i) == 1.0) ++ones;
        }
        CHECK(ones == 5);
    }
    SUBCASE("labels follow the model") {
        const Eigen::VectorXd expected =
            data.X * data.theta_star / std::sqrt(double(cfg.m)) + data.eps;
        CHECK((data.y - expected).lpNorm<Eigen::Infinity>() == 0.0);
    }
    SUBCASE("noiseless labels are exact") {
        ExperimentConfig quiet = cfg;
        quiet.sigma_eps2 = 0.0;
        const Dataset d2 = generate_dataset(quiet, 0);
        const Eigen::VectorXd expected =
            d2.X * d2.theta_star / std::sqrt(double(cfg.m));
        CHECK((d2.y - expected).lpNorm<Eigen::Infinity>() == 0.0);
    }
    SUBCASE("deterministic in (seed, trial)") {
        const Dataset again = generate_dataset(cfg, 0);
        CHECK(data.X == again.X);
        CHECK(data.y == again.y);
        const Dataset other = generate_dataset(cfg, 1);
        CHECK(data.X != other.X);
    }
}

TEST_CASE("feature moments match the activation constants") {
    ExperimentConfig cfg = small_config();
    cfg.n = 2000;
    cfg.m = 40;
    cfg.d = 400;
    const Dataset data = generate_dataset(cfg, 3);
    const auto [rho1, rho_star2] = activation_constants(cfg.activation);
    const double bound = 5.0 / std::sqrt(double(cfg.n));
    for (int j = 0; j < cfg.m; ++j) {
        const double mean = data.X.col(j).mean();
        const double var = data.X.col(j).squaredNorm() / cfg.n - mean * mean;
        CHECK(std::abs(mean) <= bound);
        CHECK(std::abs(var - (rho1 * rho1 + rho_star2)) <= bound);
    }
}

TEST_CASE("surrogate features") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd W = random_matrix(15, 25, rng);
    const Eigen::MatrixXd Z = random_matrix(40, 25, rng);
    SUBCASE("pure linear case is exact") {
        std::mt19937_64 local(1);
        const Eigen::MatrixXd X = surrogate_features(W, Z, 1.0, 0.0, local);
        const Eigen::MatrixXd expected = Z * W.transpose() / std::sqrt(25.0);
        CHECK((X - expected).lpNorm<Eigen::Infinity>() <= 1e-14);
    }
    SUBCASE("deterministic under a fixed stream") {
        std::mt19937_64 r1(7), r2(7);
        CHECK(surrogate_features(W, Z, 0.6, 0.3, r1) ==
              surrogate_features(W, Z, 0.6, 0.3, r2));
    }
    SUBCASE("row covariance matches the surrogate formula") {
        const int rows = 10000;
        std::mt19937_64 local(9);
        const Eigen::MatrixXd Zbig = random_matrix(rows, 25, local);
        const Eigen::MatrixXd X = surrogate_features(W, Zbig, 0.6, 0.3, local);
        const Eigen::MatrixXd sample = X.transpose() * X / rows;
        const Eigen::MatrixXd target =
            (0.36 / 25.0) * (W * W.transpose()) +
            0.3 * Eigen::MatrixXd::Identity(15, 15);
        auto spectral = [](const Eigen::MatrixXd& sym) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
            return eig.eigenvalues().cwiseAbs().maxCoeff();
        };
        CHECK(spectral(sample - target) <= 0.1 * spectral(target));
    }
}

TEST_CASE("elastic net solver basics") {
    SUBCASE("zero labels give zero solution") {
        std::mt19937_64 rng(3);
        const Eigen::MatrixXd X = random_matrix(30, 20, rng);
        const Eigen::VectorXd y = Eigen::VectorXd::Zero(30);
        const FitResult fit = fit_elastic_net(X, y, 0.1, 0.1);
        CHECK(fit.theta.lpNorm<Eigen::Infinity>() == 0.0);
    }
    SUBCASE("scalar instance") {
        Eigen::MatrixXd X(1, 1);
        X << 2.0;
        Eigen::VectorXd y(1);
        y << 3.0;
        // minimize (1/2)(3 - 2 theta)^2 + theta^2/2 -> theta = 6/5
        const FitResult fit = fit_elastic_net(X, y, 0.0, 1.0);
        CHECK(fit.theta(0) == doctest::Approx(1.2).epsilon(1e-8));
    }
    SUBCASE("unregularized underdetermined case is rejected") {
        std::mt19937_64 rng(4);
        const Eigen::MatrixXd X = random_matrix(10, 20, rng);
        const Eigen::VectorXd y = Eigen::VectorXd::Ones(10);
        CHECK_THROWS_AS(fit_elastic_net(X, y, 0.0, 0.0), std::invalid_argument);
    }
}

TEST_CASE("FISTA matches the coordinate-descent oracle") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 4; ++rep) {
        const Eigen::MatrixXd X = random_matrix(50, 80, rng);
        const Eigen::VectorXd y = random_matrix(50, 1, rng);
        const double lambda = std::pow(10.0, -1.0 - rep);
        const double alpha = std::pow(10.0, -4.0 + rep);
        const FitResult fit = fit_elastic_net(X, y, lambda, alpha);
        const Eigen::VectorXd cd = coordinate_descent(X, y, lambda, alpha);
        const double f_fista = objective(X, y, fit.theta, lambda, alpha);
        const double f_cd = objective(X, y, cd, lambda, alpha);
        CHECK(std::abs(f_fista - f_cd) <= 1e-8 * std::max(1.0, std::abs(f_cd)));
    }
}

TEST_CASE("FISTA satisfies the KKT conditions at convergence") {
    std::mt19937_64 rng(18);
    const Eigen::MatrixXd X = random_matrix(60, 40, rng);
    const Eigen::VectorXd y = random_matrix(60, 1, rng);
    const double lambda = 0.05, alpha = 0.01;
    const int n = 60, m = 40;
    const FitResult fit = fit_elastic_net(X, y, lambda, alpha);
    const Eigen::VectorXd grad =
        X.transpose() * (X * fit.theta / std::sqrt(double(m)) - y) /
            (n * std::sqrt(double(m))) +
        (alpha / m) * fit.theta;
    const double tol = 1e-7;
    for (int j = 0; j < m; ++j) {
        if (fit.theta(j) == 0.0) {
            CHECK(std::abs(grad(j)) <= lambda / m + tol);
        } else {
            const double sign = fit.theta(j) > 0 ? 1.0 : -1.0;
            CHECK(std::abs(grad(j) + (lambda / m) * sign) <= tol);
        }
    }
}

TEST_CASE("empirical metrics") {
    ExperimentConfig cfg = small_config();
    const Dataset data = generate_dataset(cfg, 0);
    SUBCASE("train error of the zero vector") {
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(cfg.m);
        CHECK(empirical_train_error(zero, data.X, data.y, cfg.reg) ==
              doctest::Approx(data.y.squaredNorm() / (2.0 * cfg.n)).epsilon(1e-14));
    }
    SUBCASE("train error of the truth in the noiseless case") {
        ExperimentConfig quiet = cfg;
        quiet.sigma_eps2 = 0.0;
        const Dataset d2 = generate_dataset(quiet, 0);
        double penalty = 0.0;
        for (int i = 0; i < cfg.m; ++i) penalty += cfg.reg.value(d2.theta_star(i));
        CHECK(empirical_train_error(d2.theta_star, d2.X, d2.y, cfg.reg) ==
              doctest::Approx(penalty / cfg.m).epsilon(1e-12));
    }
    SUBCASE("gen error at perfect recovery approaches the noise floor") {
        std::mt19937_64 rng(6);
        ExperimentConfig wide = cfg;
        wide.test_size = 20000;
        const GenEstimate gen = empirical_gen_error(
            data.theta_star, wide, data, GenMode::TestSet, FeatureKind::Nonlinear,
            rng);
        CHECK(std::abs(gen.estimate - cfg.sigma_eps2) <= 3.0 * gen.std_error);
        CHECK_FALSE(gen.small_test_warning);
    }
    SUBCASE("nonzero fraction counting") {
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(10);
        CHECK(empirical_nonzero_fraction(theta) == 0.0);
        theta.setOnes();
        CHECK(empirical_nonzero_fraction(theta) == 1.0);
        theta(0) = 0.001 / std::sqrt(10.0);  // below the 0.01/sqrt(m) cut
        CHECK(empirical_nonzero_fraction(theta) == doctest::Approx(0.9));
    }
}

TEST_CASE("surrogate-exact and test-set gen estimates agree") {
    ExperimentConfig cfg = small_config();
    cfg.test_size = 40000;
    Dataset data = generate_dataset(cfg, 1);
    std::mt19937_64 rng(8);
    const auto [rho1, rho_star2] = activation_constants(cfg.activation);
    data.X = surrogate_features(data.W, data.Z, rho1, rho_star2, rng);
    data.y = data.X * data.theta_star / std::sqrt(double(cfg.m)) + data.eps;
    const FitResult fit =
        fit_elastic_net(data.X, data.y, cfg.reg.lambda, cfg.reg.alpha);
    const GenEstimate exact = empirical_gen_error(
        fit.theta, cfg, data, GenMode::SurrogateExact, FeatureKind::Surrogate, rng);
    const GenEstimate sampled = empirical_gen_error(
        fit.theta, cfg, data, GenMode::TestSet, FeatureKind::Surrogate, rng);
    CHECK(exact.std_error == 0.0);
    CHECK(std::abs(exact.estimate - sampled.estimate) <= 3.0 * sampled.std_error);
}

TEST_CASE("trial aggregation") {
    ExperimentConfig cfg = small_config();
    SUBCASE("single trial flags undefined standard errors") {
        ExperimentConfig one = cfg;
        one.trials = 1;
        const EmpiricalAggregate agg = run_trials(one, FeatureKind::Surrogate, 1);
        CHECK(agg.se_undefined);
        CHECK(agg.train_se == 0.0);
    }
    SUBCASE("bit-identical across repeat runs and thread counts") {
        const EmpiricalAggregate a = run_trials(cfg, FeatureKind::Nonlinear, 1);
        const EmpiricalAggregate b = run_trials(cfg, FeatureKind::Nonlinear, 4);
        CHECK(a.train_mean == b.train_mean);
        CHECK(a.gen_mean == b.gen_mean);
        CHECK(a.nonzero_mean == b.nonzero_mean);
        for (std::size_t i = 0; i < a.records.size(); ++i) {
            CHECK(a.records[i].train == b.records[i].train);
            CHECK(a.records[i].gen == b.records[i].gen);
        }
    }
    SUBCASE("standard error shrinks roughly like 1/sqrt(trials)") {
        ExperimentConfig lo = cfg;
        lo.trials = 16;
        ExperimentConfig hi = cfg;
        hi.trials = 64;
        const EmpiricalAggregate a = run_trials(lo, FeatureKind::Surrogate, 4);
        const EmpiricalAggregate b = run_trials(hi, FeatureKind::Surrogate, 4);
        const double ratio = a.gen_se / b.gen_se;
        CHECK(ratio >= 1.6);
        CHECK(ratio <= 2.5);
    }
}
