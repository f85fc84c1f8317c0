#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "zerodisp/evolution.hpp"
#include "zerodisp/potential.hpp"
#include "zerodisp/threshold.hpp"

namespace zerodisp::cli {

using json = nlohmann::ordered_json;

enum class Action { classify, tune, laurent, evolve, verify_kernels, full };
std::string to_string(Action a);
Action action_from_string(const std::string& s);

struct MatchedTuneSpec {
    int param_index = 0;
    std::pair<double, double> bracket{0.0, 0.0};
    threshold::TuneTarget a, b;
};

struct TuneSpec {
    std::optional<threshold::TuneTarget> target;
    std::optional<MatchedTuneSpec> matched;
    bool enabled() const { return target.has_value() || matched.has_value(); }
};

struct Checks {
    std::optional<std::string> classification;
    bool refinement_stable = false;
    std::optional<std::pair<double, double>> sup_exponent;
    std::optional<std::pair<double, double>> lorentz_exponent;
    std::optional<double> residual_sup_max;
    std::optional<double> residual_without_s_sup_max;
    std::optional<double> laurent_tolerance;
    std::optional<double> tail_tolerance;
    std::optional<double> c0_tolerance;
    double invariant_tolerance = 1e-8;
};

struct ExperimentConfig {
    std::string name = "experiment";
    potential::PotentialSpec potential;
    int n = 800;
    double r_max = 40.0;
    int ell_max = 2;
    Action action = Action::full;
    TuneSpec tune;
    threshold::LaurentOptions laurent;
    evolution::ExperimentOptions evolve;
    std::string out_dir = "out";
    std::vector<std::string> formats{"json", "csv"};
    Checks checks;
    std::string source_text;
};

// Parses TOML text; errors are ConfigError with "source:line:col: message".
ExperimentConfig parse_config(const std::string& text, const std::string& source_name = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

// Git blob id (SHA-1 of "blob <len>\0" + text).
std::string content_hash(const std::string& text);

std::vector<std::string> bundled_suites();
const std::string& suite_text(const std::string& name);
ExperimentConfig load_suite(const std::string& name);

// Applies the tuning section (if any) and returns the tuned potential with
// a JSON summary of what was done.
potential::PotentialSpec apply_tuning(const ExperimentConfig& cfg, const RadialGrid& grid,
                                      json* summary = nullptr);

json threshold_to_json(const threshold::ThresholdReport& rep, bool with_profiles);
threshold::ThresholdReport threshold_from_json(const json& j);

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    std::string bound;
};

struct RunOptions {
    std::optional<std::string> out_dir;
    std::optional<Action> action;
    unsigned seed = 12345;
    int threads = 1;
    bool plots = false;
};

struct RunReport {
    json report;
    std::vector<CheckResult> checks;
    std::vector<std::filesystem::path> files;
    int exit_code = 0;
};

// Runs the pipeline and writes report.json, traces/*.csv and plots/*.svg.
RunReport run(const ExperimentConfig& cfg, const RunOptions& opt);

// Random complex block systems (total size <= 12) inverted through the Schur
// complement and compared against a direct LU inverse; returns the largest
// spectral-norm difference.
double feshbach_selfcheck(unsigned seed, int systems);

// Relative error of every kernel mass at the separations 0.5, 1, 2, 5.
json kernel_mass_table(int quad_points, double* max_error = nullptr);

// Writes a CSV field with RFC-4180 quoting when needed.
std::string csv_field(const std::string& s);

}  // namespace zerodisp::cli
