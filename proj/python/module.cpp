#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "rfcurves/numerics.hpp"
#include "rfcurves/predictor.hpp"
#include "rfcurves/simulator.hpp"
#include "rfcurves/sweep.hpp"

namespace py = pybind11;
using namespace rfcurves;

namespace {

SignalSpec signal_from_atoms(const std::vector<std::pair<double, double>>& atoms) {
    SignalSpec signal{atoms};
    signal.validate();
    return signal;
}

ActivationSpec activation_by_name(const std::string& name) {
    if (name == "tanh") return ActivationSpec::tanh_act();
    if (name == "erf") return ActivationSpec::erf_act();
    if (name == "identity") return ActivationSpec::identity();
    throw std::invalid_argument("unknown activation: " + name);
}

py::dict predict_py(double gamma, double delta, double sigma_eps2, double lambda,
                    double alpha, double rho1, double rho_star2,
                    const std::vector<std::pair<double, double>>& atoms) {
    const ProblemSpec spec =
        ProblemSpec::make(gamma, delta, sigma_eps2, rho1, rho_star2,
                          RegularizerSpec::elastic_net(lambda, alpha),
                          signal_from_atoms(atoms));
    const TheoryPrediction pred = predict(spec);
    py::dict out;
    out["train_error"] = pred.train_error;
    out["gen_error"] = pred.gen_error;
    out["nonzero_fraction"] = pred.nonzero_fraction;
    out["derivative_method_gap"] = pred.derivative_method_gap;
    out["beta"] = pred.saddle.beta;
    out["q"] = pred.saddle.q;
    out["xi"] = pred.saddle.xi;
    out["t"] = pred.saddle.t;
    out["residual"] = pred.saddle.residual;
    out["value"] = pred.saddle.value;
    return out;
}

py::dict run_trials_py(int n, int m, int d, double sigma_eps2, double lambda,
                       double alpha, const std::string& activation,
                       std::uint64_t seed, int trials, const std::string& features,
                       int threads,
                       const std::vector<std::pair<double, double>>& atoms) {
    ExperimentConfig cfg;
    cfg.n = n;
    cfg.m = m;
    cfg.d = d;
    cfg.sigma_eps2 = sigma_eps2;
    cfg.reg = RegularizerSpec::elastic_net(lambda, alpha);
    cfg.signal = signal_from_atoms(atoms);
    cfg.activation = activation_by_name(activation);
    cfg.seed = seed;
    cfg.trials = trials;
    FeatureKind kind;
    if (features == "nonlinear") kind = FeatureKind::Nonlinear;
    else if (features == "surrogate") kind = FeatureKind::Surrogate;
    else throw std::invalid_argument("features must be nonlinear or surrogate");
    const EmpiricalAggregate agg = run_trials(cfg, kind, threads);
    py::dict out;
    out["train_mean"] = agg.train_mean;
    out["train_se"] = agg.train_se;
    out["gen_mean"] = agg.gen_mean;
    out["gen_se"] = agg.gen_se;
    out["nonzero_mean"] = agg.nonzero_mean;
    out["nonzero_se"] = agg.nonzero_se;
    out["trials_completed"] = agg.trials_completed;
    out["trials_failed"] = agg.trials_failed;
    return out;
}

std::string sweep_csv(const std::string& config_json) {
    const SweepConfig cfg = SweepConfig::parse(config_json);
    const SweepTable table = run_sweep(cfg);
    std::ostringstream out;
    if (cfg.format == OutputFormat::Jsonl) {
        write_jsonl(table, out);
    } else {
        write_csv(table, out);
    }
    return out.str();
}

}  // namespace

PYBIND11_MODULE(_rfcurves, mod) {
    mod.doc() = "Asymptotic learning curves for regularized random-feature "
                "least squares";

    mod.def("q_function", &q_function, py::arg("x"),
            "Gaussian tail probability P(Z > x)");
    mod.def("std_normal_pdf", &std_normal_pdf, py::arg("x"));
    mod.def(
        "activation_constants",
        [](const std::string& name, int quad_order) {
            return activation_constants(activation_by_name(name), quad_order);
        },
        py::arg("activation"), py::arg("quad_order") = 400,
        "(rho1, rho_star2) of a named odd activation");
    mod.def("predict", &predict_py, py::arg("gamma"), py::arg("delta"),
            py::arg("sigma_eps2"), py::arg("lambda_"), py::arg("alpha"),
            py::arg("rho1"), py::arg("rho_star2"),
            py::arg("signal") =
                std::vector<std::pair<double, double>>{{0.0, 0.5}, {1.0, 0.5}},
            "Asymptotic train/gen error and effective sparsity from the "
            "scalar saddle-point problem");
    mod.def(
        "fit_elastic_net",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
           double alpha, double tol, int max_iter) {
            const FitResult fit = fit_elastic_net(X, y, lambda, alpha, tol, max_iter);
            return py::make_tuple(fit.theta, fit.iterations, fit.residual);
        },
        py::arg("X"), py::arg("y"), py::arg("lambda_"), py::arg("alpha"),
        py::arg("tol") = 1e-9, py::arg("max_iter") = 50000,
        "FISTA elastic-net fit; returns (theta, iterations, residual)");
    mod.def("run_trials", &run_trials_py, py::arg("n"), py::arg("m"), py::arg("d"),
            py::arg("sigma_eps2"), py::arg("lambda_"), py::arg("alpha"),
            py::arg("activation") = "tanh", py::arg("seed") = 0,
            py::arg("trials") = 20, py::arg("features") = "nonlinear",
            py::arg("threads") = 1,
            py::arg("signal") =
                std::vector<std::pair<double, double>>{{0.0, 0.5}, {1.0, 0.5}},
            "Aggregate finite-size experiments");
    mod.def("sweep", &sweep_csv, py::arg("config_json"),
            "Run a sweep described by a JSON config; returns CSV or JSONL text");
}
