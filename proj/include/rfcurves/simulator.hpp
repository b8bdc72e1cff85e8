#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rfcurves/regularizer.hpp"

namespace rfcurves {

enum class ActivationKind { Tanh, Erf, Identity, Custom };

/// Odd scalar activation applied entrywise to the pre-features.
struct ActivationSpec {
    ActivationKind kind = ActivationKind::Tanh;
    std::function<double(double)> fn;  // required for Custom
    std::string label = "tanh";

    static ActivationSpec tanh_act();
    static ActivationSpec erf_act();
    static ActivationSpec identity();
    static ActivationSpec custom(std::function<double(double)> fn, std::string label);

    double operator()(double x) const;
    /// Throws if sigma(-x) != -sigma(x) on a sample grid.
    void check_odd() const;
};

/// Finite-size experiment: n samples, m features, ambient dimension d.
struct ExperimentConfig {
    int n = 0;
    int m = 0;
    int d = 0;
    double sigma_eps2 = 0.0;
    RegularizerSpec reg;
    SignalSpec signal;
    ActivationSpec activation;
    std::uint64_t seed = 0;
    int trials = 1;
    int test_size = 0;  // 0 means the 10 * n default
    double zero_threshold_scale = 0.01;

    void validate() const;
    int effective_test_size() const { return test_size > 0 ? test_size : 10 * n; }
};

struct Dataset {
    Eigen::MatrixXd W;           // m x d random first layer
    Eigen::MatrixXd Z;           // n x d inputs
    Eigen::MatrixXd X;           // n x m features sigma(Z W^T / sqrt(d))
    Eigen::VectorXd y;           // n labels
    Eigen::VectorXd theta_star;  // m true coefficients
    Eigen::VectorXd eps;         // n noise draws
};

/// (rho1, rho_star2) of the activation: E[a sigma(a)] and
/// E[sigma(a)^2] - rho1^2 over a ~ N(0,1).
std::pair<double, double> activation_constants(const ActivationSpec& activation,
                                               int quad_order = 400);

/// Fresh data for one trial; fully reproducible from (cfg.seed, trial_index).
Dataset generate_dataset(const ExperimentConfig& cfg, int trial_index);

/// Gaussian-surrogate feature matrix (rho1 / sqrt(d)) Z W^T + rho_star G.
Eigen::MatrixXd surrogate_features(const Eigen::MatrixXd& W, const Eigen::MatrixXd& Z,
                                   double rho1, double rho_star2,
                                   std::mt19937_64& rng);

struct FitResult {
    Eigen::VectorXd theta;
    int iterations = 0;
    double residual = 0.0;
};

/// Minimize (1/(2n)) ||y - X theta / sqrt(m)||^2 + (lambda/m) ||theta||_1
/// + (alpha/(2m)) ||theta||^2 by FISTA with backtracking and adaptive
/// restart. Stops when the prox-gradient residual infinity norm <= tol.
FitResult fit_elastic_net(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double lambda, double alpha, double tol = 1e-9,
                          int max_iter = 50000);

/// (1/(2n)) ||y - X theta / sqrt(m)||^2 + r(theta)/m.
double empirical_train_error(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, const RegularizerSpec& reg);

enum class GenMode { TestSet, SurrogateExact };
enum class FeatureKind { Nonlinear, Surrogate };

struct GenEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    bool small_test_warning = false;
};

/// Squared prediction error on fresh data. TestSet draws test points through
/// the trial's feature map; SurrogateExact evaluates
/// sigma_eps2 + (theta - theta*)^T R (theta - theta*) / m with the exact
/// surrogate covariance R = (rho1^2/d) W W^T + rho_star2 I.
GenEstimate empirical_gen_error(const Eigen::VectorXd& theta_hat,
                                const ExperimentConfig& cfg, const Dataset& data,
                                GenMode mode, FeatureKind kind,
                                std::mt19937_64& rng);

/// Fraction of coordinates with |theta_i| >= threshold_scale / sqrt(m).
double empirical_nonzero_fraction(const Eigen::VectorXd& theta,
                                  double threshold_scale = 0.01);

struct TrialRecord {
    int trial = 0;
    double train = 0.0;
    double gen = 0.0;
    double gen_se = 0.0;
    double nonzero = 0.0;
    int iters = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
};

struct EmpiricalAggregate {
    double train_mean = 0.0, train_se = 0.0;
    double gen_mean = 0.0, gen_se = 0.0;
    double nonzero_mean = 0.0, nonzero_se = 0.0;
    int trials_completed = 0;
    int trials_failed = 0;
    bool se_undefined = false;  // single completed trial
    std::vector<TrialRecord> records;
};

/// Run cfg.trials independent experiments and aggregate mean / standard
/// error per metric. Trials run in parallel over `threads` workers; each
/// trial derives its RNG stream from (seed, trial_index), so results do not
/// depend on the thread count.
EmpiricalAggregate run_trials(const ExperimentConfig& cfg, FeatureKind kind,
                              int threads = 1);

}  // namespace rfcurves
