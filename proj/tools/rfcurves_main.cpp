#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rfcurves/sweep.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::string out_path;
    std::string format;
    std::string activation;
    std::string sweep_axis;
    std::vector<double> axis_values;
    double gamma = -1, lambda = -1, alpha = -1, delta = -1, sigma_eps2 = -1;
    long long seed = -1;
    int trials = -1, threads = -1, total_size = -1, test_size = -1;
};

void add_common_flags(CLI::App* cmd, CliOverrides& ov) {
    cmd->add_option("--config", ov.config_path, "JSON config file");
    cmd->add_option("--out", ov.out_path, "output path (default stdout)");
    cmd->add_option("--format", ov.format, "csv|jsonl")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    cmd->add_option("--seed", ov.seed, "base RNG seed");
    cmd->add_option("--trials", ov.trials, "trials per sweep point");
    cmd->add_option("--threads", ov.threads,
                    "worker threads (env RFCURVES_THREADS as fallback)");
    cmd->add_option("--sweep_axis", ov.sweep_axis, "gamma|lambda")
        ->check(CLI::IsMember({"gamma", "lambda"}));
    cmd->add_option("--axis_values", ov.axis_values, "sweep axis values")
        ->delimiter(',');
    cmd->add_option("--gamma", ov.gamma, "fixed gamma (lambda sweeps)");
    cmd->add_option("--lambda", ov.lambda, "fixed lambda (gamma sweeps)");
    cmd->add_option("--alpha", ov.alpha, "l2 regularization strength");
    cmd->add_option("--delta", ov.delta, "ratio m/d");
    cmd->add_option("--sigma_eps2", ov.sigma_eps2, "label noise power");
    cmd->add_option("--activation", ov.activation, "tanh|erf|identity")
        ->check(CLI::IsMember({"tanh", "erf", "identity"}));
    cmd->add_option("--total_size", ov.total_size, "n + m for finite-size runs");
    cmd->add_option("--test_size", ov.test_size, "test points (0: 10n default)");
}

rfcurves::SweepConfig build_config(const CliOverrides& ov, rfcurves::SweepMode mode) {
    rfcurves::SweepConfig cfg;
    if (!ov.config_path.empty()) {
        std::ifstream in(ov.config_path);
        if (!in) throw std::runtime_error("cannot open config: " + ov.config_path);
        std::stringstream buf;
        buf << in.rdbuf();
        cfg = rfcurves::SweepConfig::parse(buf.str());
    }
    cfg.mode = mode;
    if (!ov.sweep_axis.empty()) {
        cfg.sweep_axis = ov.sweep_axis == "gamma" ? rfcurves::SweepAxis::Gamma
                                                  : rfcurves::SweepAxis::Lambda;
    }
    if (!ov.axis_values.empty()) cfg.axis_values = ov.axis_values;
    if (ov.gamma >= 0) cfg.gamma = ov.gamma;
    if (ov.lambda >= 0) cfg.lambda = ov.lambda;
    if (ov.alpha >= 0) cfg.alpha = ov.alpha;
    if (ov.delta >= 0) cfg.delta = ov.delta;
    if (ov.sigma_eps2 >= 0) cfg.sigma_eps2 = ov.sigma_eps2;
    if (!ov.activation.empty()) cfg.activation = ov.activation;
    if (ov.total_size >= 0) cfg.total_size = ov.total_size;
    if (ov.seed >= 0) cfg.seed = static_cast<std::uint64_t>(ov.seed);
    if (ov.trials >= 0) cfg.trials = ov.trials;
    if (ov.test_size >= 0) cfg.test_size = ov.test_size;
    if (ov.threads >= 0) {
        cfg.threads = ov.threads;
    } else if (const char* env = std::getenv("RFCURVES_THREADS")) {
        cfg.threads = std::max(1, std::atoi(env));
    }
    if (!ov.out_path.empty()) cfg.output_path = ov.out_path;
    if (!ov.format.empty()) {
        cfg.format = ov.format == "csv" ? rfcurves::OutputFormat::Csv
                                        : rfcurves::OutputFormat::Jsonl;
    }
    if (cfg.axis_values.empty()) {
        // Single-point sweep at the fixed parameters.
        cfg.axis_values = {cfg.sweep_axis == rfcurves::SweepAxis::Gamma ? cfg.gamma
                                                                        : cfg.lambda};
    }
    return cfg;
}

int emit(const rfcurves::SweepConfig& cfg, const rfcurves::SweepTable& table) {
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!cfg.output_path.empty()) {
        file.open(cfg.output_path, std::ios::binary);
        if (!file) {
            std::cerr << "cannot open output: " << cfg.output_path << "\n";
            return 2;
        }
        out = &file;
    }
    if (cfg.format == rfcurves::OutputFormat::Csv) {
        rfcurves::write_csv(table, *out);
    } else {
        rfcurves::write_jsonl(table, *out);
    }
    return table.error_rows == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asymptotic learning curves for regularized random-feature "
                 "least squares, with a finite-size simulator"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        rfcurves::SweepMode mode;
    };
    const Sub subs[] = {
        {"theory", "asymptotic curves from the saddle-point solver",
         rfcurves::SweepMode::Theory},
        {"simulate", "finite-size experiments only", rfcurves::SweepMode::Simulate},
        {"compare", "theory vs finite-size experiments", rfcurves::SweepMode::Compare},
        {"universality", "nonlinear vs Gaussian-surrogate features",
         rfcurves::SweepMode::Universality},
        {"sparsity", "effective sparsity, theory vs empirical",
         rfcurves::SweepMode::Sparsity},
    };

    CliOverrides overrides;
    for (const Sub& sub : subs) {
        CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
        add_common_flags(cmd, overrides);
        const rfcurves::SweepMode mode = sub.mode;
        cmd->callback([&overrides, mode]() {
            const rfcurves::SweepConfig cfg = build_config(overrides, mode);
            const rfcurves::SweepTable table = rfcurves::run_sweep(cfg);
            std::exit(emit(cfg, table));
        });
    }

    CLI11_PARSE(app, argc, argv);
    return 0;
}
