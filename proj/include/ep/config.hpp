#pragma once

// Run configuration: one JSON document with per-stage sections. Unknown
// keys are rejected and every problem is collected before reporting.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ep {

struct ConfigError : std::runtime_error {
    explicit ConfigError(std::vector<std::string> errs);
    std::vector<std::string> errors;
};

struct GhzConfig {
    int n_dots = 4;
    double j1 = 1e8;
    double j2 = 1e8;
};

struct ProtectConfig {
    double alpha = 2.0;
    // 0 selects the smallest admissible truncation.
    int n_max = 0;
    double kappa = 1.0;
    double tau_syn = 0.05;
    std::vector<double> durations{0.05, 0.1, 0.2};
    int trajectories = 1000;
    int cavities = 3;
};

struct SwapConfig {
    double w1 = 1000.0;
    double w2 = 500.0;
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    double d = 1.0;
    double t_end = 10.0;
    int n_k = 1024;
    // 0 selects max(6d, 20(gamma1 + gamma2)).
    double half_width = 0.0;
    std::string frame = "rotating";
    std::string propagator = "rk";
    // Fixed per-dot success probability; unset means computed from the
    // dynamics at t_end.
    std::optional<double> p_success;
    std::string rail_encoding = "paired";
};

struct SweepConfig {
    std::string unit = "dimensionless";
    double d_min = 0.1;
    double d_max = 10.0;
    int d_points = 20;
    double gamma_min = 0.1;
    double gamma_max = 10.0;
    int gamma_points = 20;
    bool log_spacing = true;
    bool delay_pulse = false;
    double plateau_tol = 1e-3;
    int max_extensions = 4;
    double w1 = 1000.0;
    double w2 = 500.0;
};

struct ConversionConfig {
    double eta_bbo = 1.0;
    double detector_efficiency = 1.0;
};

struct PipelineStageConfig {
    double duration = 0.1;
    int trajectories = 100;
};

struct OutputConfig {
    std::string dir = "out";
};

struct PipelineConfig {
    uint64_t base_seed = 20240101;
    GhzConfig ghz;
    ProtectConfig protect;
    SwapConfig swap;
    SweepConfig sweep;
    ConversionConfig conversion;
    PipelineStageConfig pipeline;
    OutputConfig output;

    // Throws ConfigError listing every violated constraint.
    void validate() const;
};

// Missing keys keep their defaults. Throws ConfigError.
PipelineConfig parse_config(const nlohmann::json& j);
PipelineConfig load_config(const std::string& path);
nlohmann::json to_json(const PipelineConfig& config);

}  // namespace ep
