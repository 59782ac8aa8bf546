// satloc: map synthesis, codebook construction, localization, evaluation and
// kernel benchmarks behind one entry point.

#include "cli/commands.hpp"

int main(int argc, char** argv)
{
    using namespace satloc::cli;
    CLI::App app{"Satellite-codebook localization toolkit", "satloc"};
    app.option_defaults()->always_capture_default();
    RunConfig cfg;
    std::vector<Command> commands{
        add_build_map(app, "build-map", cfg), add_render(app, "render", cfg), add_build_codebook(app, cfg),
        add_localize(app, cfg),           add_evaluate(app, cfg),          add_bench(app, cfg),
    };
    return run_tool(app, commands, argc, argv);
}
