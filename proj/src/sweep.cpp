#include "rfcurves/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <initializer_list>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rfcurves/predictor.hpp"

namespace rfcurves {

using nlohmann::json;

namespace {

const char* mode_name(SweepMode mode) {
    switch (mode) {
        case SweepMode::Theory: return "theory";
        case SweepMode::Simulate: return "simulate";
        case SweepMode::Compare: return "compare";
        case SweepMode::Universality: return "universality";
        case SweepMode::Sparsity: return "sparsity";
    }
    throw std::logic_error("unknown sweep mode");
}

SweepMode mode_from_name(const std::string& name) {
    if (name == "theory") return SweepMode::Theory;
    if (name == "simulate") return SweepMode::Simulate;
    if (name == "compare") return SweepMode::Compare;
    if (name == "universality") return SweepMode::Universality;
    if (name == "sparsity") return SweepMode::Sparsity;
    throw std::invalid_argument("unknown mode: " + name);
}

}  // namespace

std::string format_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void SweepConfig::validate() const {
    if (axis_values.empty()) {
        throw std::invalid_argument("SweepConfig: axis_values must be nonempty");
    }
    for (std::size_t i = 1; i < axis_values.size(); ++i) {
        if (!(axis_values[i] > axis_values[i - 1])) {
            throw std::invalid_argument(
                "SweepConfig: axis_values must be strictly increasing");
        }
    }
    for (double v : axis_values) {
        const bool positive_axis = sweep_axis == SweepAxis::Gamma;
        if (positive_axis ? !(v > 0) : v < 0) {
            throw std::invalid_argument("SweepConfig: invalid axis value");
        }
    }
    if (!(gamma > 0) || !(delta > 0)) {
        throw std::invalid_argument("SweepConfig: gamma and delta must be > 0");
    }
    if (lambda < 0 || alpha < 0 || sigma_eps2 < 0) {
        throw std::invalid_argument("SweepConfig: negative parameter");
    }
    if (total_size < 2) throw std::invalid_argument("SweepConfig: total_size < 2");
    if (trials < 1 || threads < 1) {
        throw std::invalid_argument("SweepConfig: trials and threads must be >= 1");
    }
    signal.validate();
    make_activation().check_odd();
}

ActivationSpec SweepConfig::make_activation() const {
    if (activation == "tanh") return ActivationSpec::tanh_act();
    if (activation == "erf") return ActivationSpec::erf_act();
    if (activation == "identity") return ActivationSpec::identity();
    throw std::invalid_argument("unknown activation: " + activation);
}

void SweepConfig::finite_sizes(double gamma_value, int& n, int& m, int& d) const {
    m = static_cast<int>(std::lround(total_size * gamma_value / (1.0 + gamma_value)));
    m = std::min(std::max(m, 1), total_size - 1);
    n = total_size - m;
    d = std::max(1, static_cast<int>(std::lround(m / delta)));
}

SweepConfig SweepConfig::parse(const std::string& json_text) {
    const json j = json::parse(json_text);
    SweepConfig cfg;
    if (j.contains("mode")) cfg.mode = mode_from_name(j.at("mode"));
    if (j.contains("sweep_axis")) {
        const std::string axis = j.at("sweep_axis");
        if (axis == "gamma") cfg.sweep_axis = SweepAxis::Gamma;
        else if (axis == "lambda") cfg.sweep_axis = SweepAxis::Lambda;
        else throw std::invalid_argument("unknown sweep_axis: " + axis);
    }
    if (j.contains("axis_values")) {
        cfg.axis_values = j.at("axis_values").get<std::vector<double>>();
    }
    if (j.contains("gamma")) cfg.gamma = j.at("gamma");
    if (j.contains("lambda")) cfg.lambda = j.at("lambda");
    if (j.contains("alpha")) cfg.alpha = j.at("alpha");
    if (j.contains("delta")) cfg.delta = j.at("delta");
    if (j.contains("sigma_eps2")) cfg.sigma_eps2 = j.at("sigma_eps2");
    if (j.contains("activation")) cfg.activation = j.at("activation");
    if (j.contains("signal")) {
        cfg.signal.atoms.clear();
        for (const auto& atom : j.at("signal")) {
            cfg.signal.atoms.emplace_back(atom.at(0).get<double>(),
                                          atom.at(1).get<double>());
        }
    }
    if (j.contains("total_size")) cfg.total_size = j.at("total_size");
    if (j.contains("seed")) cfg.seed = j.at("seed");
    if (j.contains("trials")) cfg.trials = j.at("trials");
    if (j.contains("threads")) cfg.threads = j.at("threads");
    if (j.contains("test_size")) cfg.test_size = j.at("test_size");
    if (j.contains("output_path")) cfg.output_path = j.at("output_path");
    if (j.contains("format")) {
        const std::string fmt = j.at("format");
        if (fmt == "csv") cfg.format = OutputFormat::Csv;
        else if (fmt == "jsonl") cfg.format = OutputFormat::Jsonl;
        else throw std::invalid_argument("unknown format: " + fmt);
    }
    return cfg;
}

std::string SweepConfig::emit() const {
    json j;
    j["mode"] = mode_name(mode);
    j["sweep_axis"] = sweep_axis == SweepAxis::Gamma ? "gamma" : "lambda";
    j["axis_values"] = axis_values;
    j["gamma"] = gamma;
    j["lambda"] = lambda;
    j["alpha"] = alpha;
    j["delta"] = delta;
    j["sigma_eps2"] = sigma_eps2;
    j["activation"] = activation;
    json atoms = json::array();
    for (const auto& [value, weight] : signal.atoms) {
        atoms.push_back(json::array({value, weight}));
    }
    j["signal"] = atoms;
    j["total_size"] = total_size;
    j["seed"] = seed;
    j["trials"] = trials;
    j["threads"] = threads;
    j["test_size"] = test_size;
    j["output_path"] = output_path;
    j["format"] = format == OutputFormat::Csv ? "csv" : "jsonl";
    return j.dump(2);
}

bool SweepConfig::operator==(const SweepConfig& other) const {
    return mode == other.mode && sweep_axis == other.sweep_axis &&
           axis_values == other.axis_values && gamma == other.gamma &&
           lambda == other.lambda && alpha == other.alpha && delta == other.delta &&
           sigma_eps2 == other.sigma_eps2 && activation == other.activation &&
           signal.atoms == other.signal.atoms && total_size == other.total_size &&
           seed == other.seed && trials == other.trials && threads == other.threads &&
           test_size == other.test_size && output_path == other.output_path &&
           format == other.format;
}

namespace {

struct PointParams {
    double gamma = 0.0;
    double lambda = 0.0;
};

PointParams point_params(const SweepConfig& cfg, double axis_value) {
    if (cfg.sweep_axis == SweepAxis::Gamma) return {axis_value, cfg.lambda};
    return {cfg.gamma, axis_value};
}

void push_numbers(std::vector<std::string>& row, std::initializer_list<double> xs) {
    for (double x : xs) row.push_back(format_number(x));
}

void finish_row(SweepTable& table, std::vector<std::string> row,
                const std::string& error) {
    while (row.size() + 1 < table.columns.size()) row.push_back("nan");
    row.push_back(error);
    if (!error.empty()) ++table.error_rows;
    table.rows.push_back(std::move(row));
}

ExperimentConfig experiment_config(const SweepConfig& cfg, const PointParams& p) {
    ExperimentConfig ex;
    cfg.finite_sizes(p.gamma, ex.n, ex.m, ex.d);
    ex.sigma_eps2 = cfg.sigma_eps2;
    ex.reg = RegularizerSpec::elastic_net(p.lambda, cfg.alpha);
    ex.signal = cfg.signal;
    ex.activation = cfg.make_activation();
    ex.seed = cfg.seed;
    ex.trials = cfg.trials;
    ex.test_size = cfg.test_size;
    return ex;
}

TheoryPrediction theory_point(const SweepConfig& cfg, const PointParams& p,
                              double rho1, double rho_star2) {
    const ProblemSpec spec =
        ProblemSpec::make(p.gamma, cfg.delta, cfg.sigma_eps2, rho1, rho_star2,
                          RegularizerSpec::elastic_net(p.lambda, cfg.alpha),
                          cfg.signal);
    return predict(spec);
}

double relative_gap(double theory, double empirical) {
    return std::abs(theory - empirical) / std::max(1e-12, std::abs(theory));
}

double z_score(double a, double se_a, double b, double se_b) {
    const double se = std::sqrt(se_a * se_a + se_b * se_b);
    return (a - b) / std::max(se, 1e-300);
}

}  // namespace

SweepTable run_theory_sweep(const SweepConfig& cfg) {
    cfg.validate();
    const auto [rho1, rho_star2] = activation_constants(cfg.make_activation());
    SweepTable table;
    table.columns = {"gamma", "lambda", "alpha", "train_theory", "gen_theory",
                     "nonzero_theory", "beta", "q", "xi", "t", "residual", "error"};
    for (double axis : cfg.axis_values) {
        const PointParams p = point_params(cfg, axis);
        std::vector<std::string> row;
        push_numbers(row, {p.gamma, p.lambda, cfg.alpha});
        std::string error;
        try {
            const TheoryPrediction pred = theory_point(cfg, p, rho1, rho_star2);
            push_numbers(row, {pred.train_error, pred.gen_error, pred.nonzero_fraction,
                               pred.saddle.beta, pred.saddle.q, pred.saddle.xi,
                               pred.saddle.t, pred.saddle.residual});
        } catch (const std::exception& e) {
            error = e.what();
        }
        finish_row(table, std::move(row), error);
    }
    return table;
}

SweepTable run_simulate(const SweepConfig& cfg) {
    cfg.validate();
    SweepTable table;
    table.columns = {"gamma", "lambda", "alpha", "n", "m", "d",
                     "train_emp", "train_se", "gen_emp", "gen_se",
                     "nonzero_emp", "nonzero_se", "trials_failed", "error"};
    for (double axis : cfg.axis_values) {
        const PointParams p = point_params(cfg, axis);
        std::vector<std::string> row;
        std::string error;
        try {
            const ExperimentConfig ex = experiment_config(cfg, p);
            push_numbers(row, {p.gamma, p.lambda, cfg.alpha, double(ex.n),
                               double(ex.m), double(ex.d)});
            const EmpiricalAggregate agg =
                run_trials(ex, FeatureKind::Nonlinear, cfg.threads);
            push_numbers(row, {agg.train_mean, agg.train_se, agg.gen_mean, agg.gen_se,
                               agg.nonzero_mean, agg.nonzero_se,
                               double(agg.trials_failed)});
        } catch (const std::exception& e) {
            error = e.what();
        }
        finish_row(table, std::move(row), error);
    }
    return table;
}

SweepTable run_compare(const SweepConfig& cfg) {
    cfg.validate();
    const auto [rho1, rho_star2] = activation_constants(cfg.make_activation());
    SweepTable table;
    table.columns = {"gamma", "lambda", "alpha", "n", "m", "d",
                     "train_theory", "gen_theory", "nonzero_theory",
                     "train_emp", "train_se", "gen_emp", "gen_se",
                     "nonzero_emp", "nonzero_se",
                     "relative_gap_train", "relative_gap_gen",
                     "relative_gap_nonzero", "error"};
    for (double axis : cfg.axis_values) {
        const PointParams p = point_params(cfg, axis);
        std::vector<std::string> row;
        std::string error;
        try {
            const ExperimentConfig ex = experiment_config(cfg, p);
            push_numbers(row, {p.gamma, p.lambda, cfg.alpha, double(ex.n),
                               double(ex.m), double(ex.d)});
            const TheoryPrediction pred = theory_point(cfg, p, rho1, rho_star2);
            const EmpiricalAggregate agg =
                run_trials(ex, FeatureKind::Nonlinear, cfg.threads);
            push_numbers(row, {pred.train_error, pred.gen_error, pred.nonzero_fraction,
                               agg.train_mean, agg.train_se, agg.gen_mean, agg.gen_se,
                               agg.nonzero_mean, agg.nonzero_se,
                               relative_gap(pred.train_error, agg.train_mean),
                               relative_gap(pred.gen_error, agg.gen_mean),
                               relative_gap(pred.nonzero_fraction, agg.nonzero_mean)});
        } catch (const std::exception& e) {
            error = e.what();
        }
        finish_row(table, std::move(row), error);
    }
    return table;
}

SweepTable run_universality(const SweepConfig& cfg) {
    cfg.validate();
    SweepTable table;
    table.columns = {"gamma", "lambda", "alpha", "n", "m", "d",
                     "train_nonlinear", "train_nonlinear_se",
                     "gen_nonlinear", "gen_nonlinear_se",
                     "nonzero_nonlinear", "nonzero_nonlinear_se",
                     "train_surrogate", "train_surrogate_se",
                     "gen_surrogate", "gen_surrogate_se",
                     "nonzero_surrogate", "nonzero_surrogate_se",
                     "z_train", "z_gen", "z_nonzero", "error"};
    for (double axis : cfg.axis_values) {
        const PointParams p = point_params(cfg, axis);
        std::vector<std::string> row;
        std::string error;
        try {
            const ExperimentConfig ex = experiment_config(cfg, p);
            push_numbers(row, {p.gamma, p.lambda, cfg.alpha, double(ex.n),
                               double(ex.m), double(ex.d)});
            const EmpiricalAggregate nl =
                run_trials(ex, FeatureKind::Nonlinear, cfg.threads);
            const EmpiricalAggregate sg =
                run_trials(ex, FeatureKind::Surrogate, cfg.threads);
            push_numbers(row, {nl.train_mean, nl.train_se, nl.gen_mean, nl.gen_se,
                               nl.nonzero_mean, nl.nonzero_se,
                               sg.train_mean, sg.train_se, sg.gen_mean, sg.gen_se,
                               sg.nonzero_mean, sg.nonzero_se,
                               z_score(nl.train_mean, nl.train_se, sg.train_mean,
                                       sg.train_se),
                               z_score(nl.gen_mean, nl.gen_se, sg.gen_mean, sg.gen_se),
                               z_score(nl.nonzero_mean, nl.nonzero_se,
                                       sg.nonzero_mean, sg.nonzero_se)});
        } catch (const std::exception& e) {
            error = e.what();
        }
        finish_row(table, std::move(row), error);
    }
    return table;
}

SweepTable run_sparsity_sweep(const SweepConfig& cfg) {
    cfg.validate();
    const auto [rho1, rho_star2] = activation_constants(cfg.make_activation());
    SweepTable table;
    table.columns = {"gamma", "lambda", "alpha",
                     "nonzero_over_m", "nonzero_over_n",
                     "nonzero_over_m_emp", "nonzero_over_m_se",
                     "nonzero_over_n_emp", "nonzero_over_n_se", "error"};
    for (double axis : cfg.axis_values) {
        const PointParams p = point_params(cfg, axis);
        std::vector<std::string> row;
        push_numbers(row, {p.gamma, p.lambda, cfg.alpha});
        std::string error;
        try {
            const TheoryPrediction pred = theory_point(cfg, p, rho1, rho_star2);
            const ExperimentConfig ex = experiment_config(cfg, p);
            const EmpiricalAggregate agg =
                run_trials(ex, FeatureKind::Nonlinear, cfg.threads);
            push_numbers(row, {pred.nonzero_fraction, pred.nonzero_fraction * p.gamma,
                               agg.nonzero_mean, agg.nonzero_se,
                               agg.nonzero_mean * p.gamma, agg.nonzero_se * p.gamma});
        } catch (const std::exception& e) {
            error = e.what();
        }
        finish_row(table, std::move(row), error);
    }
    return table;
}

SweepTable run_sweep(const SweepConfig& cfg) {
    switch (cfg.mode) {
        case SweepMode::Theory: return run_theory_sweep(cfg);
        case SweepMode::Simulate: return run_simulate(cfg);
        case SweepMode::Compare: return run_compare(cfg);
        case SweepMode::Universality: return run_universality(cfg);
        case SweepMode::Sparsity: return run_sparsity_sweep(cfg);
    }
    throw std::logic_error("run_sweep: unknown mode");
}

void write_csv(const SweepTable& table, std::ostream& out) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out << ',';
        out << table.columns[c];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << row[c];
        }
        out << '\n';
    }
}

void write_jsonl(const SweepTable& table, std::ostream& out) {
    for (const auto& row : table.rows) {
        json obj = json::object();
        for (std::size_t c = 0; c < row.size() && c < table.columns.size(); ++c) {
            const std::string& cell = row[c];
            char* end = nullptr;
            const double value = std::strtod(cell.c_str(), &end);
            const bool numeric =
                !cell.empty() && end == cell.c_str() + cell.size() &&
                std::isfinite(value) && table.columns[c] != "error";
            if (numeric) {
                obj[table.columns[c]] = value;
            } else {
                obj[table.columns[c]] = cell;
            }
        }
        out << obj.dump() << '\n';
    }
}

}  // namespace rfcurves
