#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rfcurves/simulator.hpp"

namespace rfcurves {

enum class SweepMode { Theory, Simulate, Compare, Universality, Sparsity };
enum class SweepAxis { Gamma, Lambda };
enum class OutputFormat { Csv, Jsonl };

/// One sweep: a moving axis (gamma or lambda), fixed problem parameters, and
/// output plumbing. Parsed from / emitted to a flat JSON document.
struct SweepConfig {
    SweepMode mode = SweepMode::Theory;
    SweepAxis sweep_axis = SweepAxis::Gamma;
    std::vector<double> axis_values;
    double gamma = 1.0;   // fixed value when sweeping lambda
    double lambda = 1e-3; // fixed value when sweeping gamma
    double alpha = 0.0;
    double delta = 1.0;
    double sigma_eps2 = 0.1;
    std::string activation = "tanh";
    SignalSpec signal = SignalSpec::half_ones();
    int total_size = 1000;  // n + m for finite-size runs
    std::uint64_t seed = 0;
    int trials = 20;
    int threads = 1;
    int test_size = 0;
    std::string output_path;
    OutputFormat format = OutputFormat::Csv;

    void validate() const;
    static SweepConfig parse(const std::string& json_text);
    std::string emit() const;
    bool operator==(const SweepConfig& other) const;

    ActivationSpec make_activation() const;
    /// (n, m, d) at a given gamma: m = round(total gamma/(1+gamma)),
    /// n = total - m, d = round(m / delta).
    void finite_sizes(double gamma_value, int& n, int& m, int& d) const;
};

/// Result rows with a fixed column list; numeric cells are preformatted with
/// 17 significant digits. A nonempty final "error" cell marks a failed row.
struct SweepTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    int error_rows = 0;
};

SweepTable run_theory_sweep(const SweepConfig& cfg);
SweepTable run_simulate(const SweepConfig& cfg);
SweepTable run_compare(const SweepConfig& cfg);
SweepTable run_universality(const SweepConfig& cfg);
SweepTable run_sparsity_sweep(const SweepConfig& cfg);

/// Dispatch on cfg.mode.
SweepTable run_sweep(const SweepConfig& cfg);

/// Comma-separated with header row, LF endings, UTF-8.
void write_csv(const SweepTable& table, std::ostream& out);
/// One JSON object per row keyed by column name.
void write_jsonl(const SweepTable& table, std::ostream& out);

/// Round-trip safe float formatting (17 significant digits).
std::string format_number(double value);

}  // namespace rfcurves
