#pragma once

#include <functional>
#include <string>

#include "run_config.hpp"

namespace satloc::cli {

/// A registered subcommand. `run` is invoked by run_tool after the config
/// file, if any, has been applied.
struct Command {
    CLI::App* app = nullptr;
    std::function<void()> run;
};

Command add_build_map(CLI::App& parent, const std::string& name, RunConfig& cfg);
Command add_render(CLI::App& parent, const std::string& name, RunConfig& cfg);
Command add_build_codebook(CLI::App& parent, RunConfig& cfg);
Command add_localize(CLI::App& parent, RunConfig& cfg);
Command add_evaluate(CLI::App& parent, RunConfig& cfg);
Command add_bench(CLI::App& parent, RunConfig& cfg);

/// Parses argv, applies the selected subcommand's config file, runs it and
/// maps failures onto the exit codes.
int run_tool(CLI::App& app, std::vector<Command>& commands, int argc, char** argv);

}  // namespace satloc::cli
