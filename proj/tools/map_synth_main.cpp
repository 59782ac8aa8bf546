// map-synth: synthetic orthophoto generation and view rendering.

#include "cli/commands.hpp"

int main(int argc, char** argv)
{
    using namespace satloc::cli;
    CLI::App app{"Synthetic orthophoto maps and nadir views", "map-synth"};
    app.option_defaults()->always_capture_default();
    RunConfig cfg;
    std::vector<Command> commands{add_build_map(app, "generate", cfg), add_render(app, "render", cfg)};
    return run_tool(app, commands, argc, argv);
}
