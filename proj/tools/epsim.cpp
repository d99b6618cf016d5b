// epsim: command-line front end for the entanglement pipeline stages.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ep/config.hpp"
#include "ep/parallel.hpp"
#include "ep/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerics = 3;
constexpr int kExitStage = 4;

struct Options {
    std::string config;
    std::string out;
    std::optional<uint64_t> seed;
    size_t workers = 0;
    std::string format = "csv";
    std::string schedule;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "JSON configuration file")->envname("EP_CONFIG");
    cmd->add_option("--out", o.out, "output directory (overrides output.dir)")->envname("EP_OUT");
    cmd->add_option("--seed", o.seed, "base seed (overrides base_seed)")->envname("EP_SEED");
    cmd->add_option("--workers", o.workers, "worker threads, 0 = hardware concurrency")->envname("EP_WORKERS");
    cmd->add_option("--format", o.format, "tabular output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->envname("EP_FORMAT");
}

void print_errors(const std::vector<std::string>& errs) {
    std::cerr << nlohmann::json{{"errors", errs}}.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum-dot GHZ, cat-code protection and photon conversion simulator"};
    app.require_subcommand(1);
    Options opt;
    const char* names[] = {"ghz", "protect", "swap", "sweep", "pipeline"};
    const char* help[] = {"build a GHZ register and report timing", "run cat-code loss trajectories",
                          "integrate one photon-swap run", "sweep the long-time swap probability",
                          "run every stage end to end"};
    for (int i = 0; i < 5; ++i) {
        CLI::App* cmd = app.add_subcommand(names[i], help[i]);
        add_common(cmd, opt);
        if (std::string(names[i]) == "ghz") {
            cmd->add_option("--schedule", opt.schedule, "execute this schedule JSON instead of planning")
                ->check(CLI::ExistingFile);
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    try {
        ep::PipelineConfig config = opt.config.empty() ? ep::PipelineConfig{} : ep::load_config(opt.config);
        if (opt.seed) {
            config.base_seed = *opt.seed;
        }
        if (!opt.out.empty()) {
            config.output.dir = opt.out;
        }
        config.validate();
        const ep::Format format = opt.format == "json" ? ep::Format::Json : ep::Format::Csv;
        const size_t workers = opt.workers == 0 ? ep::default_workers() : opt.workers;

        ep::RunOutput out;
        if (cmd == "ghz") {
            std::optional<ep::Schedule> schedule;
            if (!opt.schedule.empty()) {
                std::ifstream in(opt.schedule);
                try {
                    schedule = ep::schedule_from_json(nlohmann::json::parse(in));
                } catch (const std::exception& e) {
                    throw ep::ConfigError({std::string("schedule: ") + e.what()});
                }
            }
            out = ep::cmd_ghz(config, schedule, format);
        } else if (cmd == "protect") {
            out = ep::cmd_protect(config, workers, format);
        } else if (cmd == "swap") {
            out = ep::cmd_swap(config, format);
        } else if (cmd == "sweep") {
            out = ep::cmd_sweep(config, workers, format);
        } else {
            out = ep::cmd_pipeline(config, workers, format);
        }
        ep::write_outputs(out, config.output.dir);
        std::cout << out.report.dump(2) << "\n";
        return out.ok ? 0 : kExitStage;
    } catch (const ep::ConfigError& e) {
        print_errors(e.errors);
        return kExitConfig;
    } catch (const ep::ConvergenceError& e) {
        print_errors({std::string("numerical: ") + e.what()});
        return kExitNumerics;
    } catch (const ep::StageError& e) {
        std::cerr << nlohmann::json{{"stage", e.stage}, {"error", e.what()}}.dump(2) << "\n";
        return kExitStage;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"stage", cmd}, {"error", e.what()}}.dump(2) << "\n";
        return kExitStage;
    }
}
