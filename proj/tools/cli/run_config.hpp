#pragma once
// Effective configuration of one CLI invocation and its option bindings.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "satloc/codebook.hpp"
#include "satloc/eval.hpp"
#include "satloc/localizer.hpp"
#include "satloc/map_synth.hpp"

namespace satloc::cli {

/// Exit codes shared by every tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

struct RunConfig {
    // artifacts
    std::string map;              ///< map base path (without .png / .json)
    std::string codebook;
    std::string encoder;
    std::string image;
    std::string frames;           ///< directory with trajectory.csv
    std::string import_embeddings;
    std::string encoder_id = "external";
    std::string out;              ///< run directory
    std::string name = "map";     ///< base name of map artifacts

    // map generation
    std::uint64_t seed = 7;
    int width = 2048;
    int height = 2048;
    double mpp = 0.25;
    double origin_x = 0.0;
    double origin_y = 0.0;
    SceneParams scene;

    // path, grid, camera, reference lighting
    std::string waypoints;        ///< "x,y;x,y;..."
    std::string segment_headings; ///< optional "h;h;..."
    GridSpec grid;
    CameraSpec camera;
    LightingSpec light = [] {
        LightingSpec l;
        l.shadow_length = 3.0;
        return l;
    }();

    // encoder
    int dim = 64;
    std::size_t train_images = 500;
    std::uint64_t pca_seed = PcaOptions{}.seed;

    // localizer
    LocalizerConfig localizer;
    std::string heading_weighting = "thresholded";
    std::string covariance_weighting = "rectified";
    std::string prior;            ///< "x,y,heading"
    std::string pose;             ///< render pose "x,y,heading"

    // evaluation
    std::string conditions = "matched,flipped";
    std::string condition;        ///< render: lighting condition for a trajectory
    TrajectoryOptions trajectory;
    std::uint64_t eval_seed = 1;
    double align_fraction = 0.10;

    // bench
    int bench_dim = 1000;
    int bench_window = 336;
    int iters = 1000;
    std::string isa = "all";

    unsigned threads = 0;         ///< 0 = hardware concurrency
    std::string config_file;
};

/// Option groups; each subcommand adds the ones it reads.
void add_output_option(CLI::App& app, RunConfig& cfg);
void add_common_options(CLI::App& app, RunConfig& cfg);
void add_map_generation_options(CLI::App& app, RunConfig& cfg);
void add_path_grid_options(CLI::App& app, RunConfig& cfg);
void add_camera_options(CLI::App& app, RunConfig& cfg);
void add_lighting_options(CLI::App& app, RunConfig& cfg);
void add_encoder_options(CLI::App& app, RunConfig& cfg);
void add_localizer_options(CLI::App& app, RunConfig& cfg);
void add_trajectory_options(CLI::App& app, RunConfig& cfg);

/// Flat `key = value` file (INI-style; `[section]` headers naming another
/// subcommand are skipped). Values fill options that were not given on the
/// command line, so flags always win. Unknown keys are a usage error.
void apply_config_file(CLI::App& sub, const std::filesystem::path& path);

/// Every option of `sub` with its effective value.
nlohmann::json effective_config(const CLI::App& sub);

/// Writes <dir>/manifest.json echoing the tool, subcommand, effective config
/// and produced files (relative to dir).
void write_manifest(const std::filesystem::path& dir, const CLI::App& sub, const std::vector<std::string>& outputs,
                    const nlohmann::json& extra = nlohmann::json::object());

PathSpec parse_path(const std::string& waypoints, const std::string& segment_headings);
PlanarPose parse_pose(const std::string& text);
std::vector<std::string> split(const std::string& text, char sep);

}  // namespace satloc::cli
