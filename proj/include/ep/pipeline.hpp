#pragma once

// Stage drivers behind the command-line tool. Each returns the report and
// the artifact files as in-memory text, so reruns can be compared byte for
// byte before anything touches the disk.

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ep/config.hpp"
#include "ep/spin_register.hpp"

namespace ep {

inline constexpr const char* kReportSchema = "ep-report/1";

enum class Format { Csv, Json };

struct StageError : std::runtime_error {
    StageError(std::string stage_name, const std::string& what)
        : std::runtime_error(stage_name + ": " + what), stage(std::move(stage_name)) {}
    std::string stage;
};

struct RunOutput {
    nlohmann::json report;
    // File name -> contents. report.json is included.
    std::map<std::string, std::string> files;
    // False when a check the stage is responsible for did not hold.
    bool ok = true;
};

// %.17g, the form used for every number written to CSV.
std::string format_double(double v);

RunOutput cmd_ghz(const PipelineConfig& config, const std::optional<Schedule>& schedule, Format format);
RunOutput cmd_protect(const PipelineConfig& config, size_t workers, Format format);
RunOutput cmd_swap(const PipelineConfig& config, Format format);
RunOutput cmd_sweep(const PipelineConfig& config, size_t workers, Format format);
RunOutput cmd_pipeline(const PipelineConfig& config, size_t workers, Format format);

// Writes every file of `out` into `dir`, creating it if needed.
void write_outputs(const RunOutput& out, const std::string& dir);

}  // namespace ep
