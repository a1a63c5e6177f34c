#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "glbandit/environment.hpp"
#include "glbandit/harness.hpp"

namespace glbandit {

/// Discount factor: a number, or the theorem tuning 1 - (Gamma / (d T))^{2/3}.
struct GammaRule {
    bool theorem = true;
    double value = 0.0;
    std::optional<std::size_t> breakpoints;  // Gamma_T; defaults to the number of segments

    bool operator==(const GammaRule&) const = default;
};

/// Window length: a number, or the matching tuning ceil((d T / Gamma)^{2/3}).
struct TauRule {
    bool theorem = true;
    std::size_t value = 0;
    std::optional<std::size_t> breakpoints;

    bool operator==(const TauRule&) const = default;
};

/// Regularisation: a number, or d log T.
struct LambdaRule {
    bool d_log_T = true;
    double value = 0.0;

    bool operator==(const LambdaRule&) const = default;
};

struct SegmentEntry {
    std::size_t start = 1;
    std::optional<Vector> theta;
    std::optional<std::array<double, 2>> polar;  // radius, angle (d = 2)

    bool operator==(const SegmentEntry& o) const {
        return start == o.start && theta.has_value() == o.theta.has_value() &&
               (!theta || same_vector(*theta, *o.theta)) && polar == o.polar;
    }
};

struct PolicyEntry {
    PolicyConfig policy;
    std::optional<GammaRule> gamma;
    std::optional<TauRule> tau;
    std::optional<double> bonus_scale;

    bool operator==(const PolicyEntry&) const = default;
};

struct ExperimentConfig {
    std::string name;
    // environment
    std::string family = "logistic";
    double reward_cap = 0.0;
    double noise_sigma = 0.1;
    std::size_t d = 2;
    double S = 1.0;
    std::size_t T = 1000;
    std::vector<SegmentEntry> segments;
    ActionGenerator actions;
    // learners
    std::vector<PolicyEntry> policies;
    GammaRule gamma;
    TauRule tau;
    LambdaRule lambda;
    double delta = 0.01;
    double bonus_scale = 1.0;
    // run
    std::size_t n_reps = 1;
    std::uint64_t base_seed = 1;
    std::string output_dir = "out";
    std::size_t parallelism = 0;  // 0: GLB_PARALLELISM or hardware concurrency
    bool write_traces = true;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Everything a run needs, with rules evaluated.
struct ResolvedExperiment {
    EnvironmentSpec env;
    std::vector<PolicySpec> policies;
    double lambda = 0.0;
    double gamma = 0.0;   // experiment-level discount
    std::size_t tau = 0;  // experiment-level window
};

double theorem_gamma(std::size_t breakpoints, std::size_t d, std::size_t T);
std::size_t theorem_tau(std::size_t breakpoints, std::size_t d, std::size_t T);

/// Checks every module precondition, throwing ConfigError with a json path.
ResolvedExperiment resolve(const ExperimentConfig& cfg);

std::string to_json_string(const ExperimentConfig& cfg);
/// Parse errors cite `source:line`; schema errors cite the json path.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// FNV-1a over the canonical json without run-placement fields (parallelism, output_dir).
std::string config_hash(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

/// Environment for scaling sweeps: `breakpoints` switches at evenly spaced rounds, each rotating theta* by 2 pi / 3
/// on the circle of radius S, starting from angle 2 pi / 3.
std::vector<SegmentEntry> sweep_segments(std::size_t breakpoints, std::size_t T, double S);

}  // namespace glbandit
