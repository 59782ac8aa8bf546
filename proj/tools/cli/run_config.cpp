#include "run_config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "satloc/simd/kernels.hpp"

namespace satloc::cli {
namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s)
{
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

double parse_number(const std::string& text, const std::string& what)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw CLI::ValidationError(what, "'" + text + "' is not a number");
    }
}

}  // namespace

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void add_output_option(CLI::App& app, RunConfig& cfg)
{
    app.add_option("-o,--out", cfg.out, "Run directory (created if missing)");
}

void add_common_options(CLI::App& app, RunConfig& cfg)
{
    app.add_option("--threads", cfg.threads, "Worker thread cap (0 = all cores)");
    app.add_option("--config", cfg.config_file, "Key = value config file; command-line flags take precedence");
}

void add_map_generation_options(CLI::App& app, RunConfig& cfg)
{
    app.add_option("--seed", cfg.seed, "Map seed");
    app.add_option("--size", [&cfg](const CLI::results_t& r) {
           cfg.width = cfg.height = static_cast<int>(parse_number(r.front(), "--size"));
           return true;
       }, "Square raster size in pixels (sets --width and --height)")
        ->type_name("INT");
    app.add_option("--width", cfg.width, "Raster width in pixels");
    app.add_option("--height", cfg.height, "Raster height in pixels");
    app.add_option("--mpp", cfg.mpp, "Meters per pixel");
    app.add_option("--origin-x", cfg.origin_x, "Map x of the raster's left edge");
    app.add_option("--origin-y", cfg.origin_y, "Map y of the raster's bottom edge");
    app.add_option("--name", cfg.name, "Base name of the map files");
    SceneParams& s = cfg.scene;
    app.add_option("--background", s.background, "Background intensity");
    app.add_option("--texture-amplitude", s.texture_amplitude, "Ground texture amplitude");
    app.add_option("--texture-cell", s.texture_cell, "Ground texture cell size (m)");
    app.add_option("--patch-density", s.patch_density, "Ground patches per hectare");
    app.add_option("--road-density", s.road_density, "Roads per hectare");
    app.add_option("--building-density", s.building_density, "Buildings per hectare");
    app.add_option("--tree-density", s.tree_density, "Trees per hectare");
}

void add_path_grid_options(CLI::App& app, RunConfig& cfg)
{
    app.add_option("--waypoints", cfg.waypoints, "Path waypoints \"x,y;x,y;...\" (meters)");
    app.add_option("--segment-headings", cfg.segment_headings, "Optional camera heading per segment \"h;h;...\"");
    app.add_option("--along-spacing", cfg.grid.along_spacing, "Grid spacing along the path (m)");
    app.add_option("--lateral-extent", cfg.grid.lateral_extent, "Grid lateral extent either side (m)");
    app.add_option("--lateral-spacing", cfg.grid.lateral_spacing, "Grid lateral spacing (m)");
}

void add_camera_options(CLI::App& app, RunConfig& cfg)
{
    app.add_option("--footprint-width", cfg.camera.footprint_width, "Camera footprint across the image (m)");
    app.add_option("--footprint-height", cfg.camera.footprint_height, "Camera footprint along the image (m)");
}

void add_lighting_options(CLI::App& app, RunConfig& cfg)
{
    LightingSpec& l = cfg.light;
    app.add_option("--sun-azimuth", l.sun_azimuth, "Sun azimuth (deg CCW from +y)");
    app.add_option("--shadow-length", l.shadow_length, "Cast shadow length (m)");
    app.add_option("--gain", l.brightness_gain, "Brightness gain");
    app.add_option("--gamma", l.gamma, "Gamma exponent");
    app.add_option("--noise", l.noise_sigma, "Gaussian noise sigma");
    app.add_option("--noise-seed", l.noise_seed, "Noise seed");
}

void add_encoder_options(CLI::App& app, RunConfig& cfg)
{
    app.add_option("--dim", cfg.dim, "Embedding dimension of the linear encoder");
    app.add_option("--train-images", cfg.train_images, "Maximum number of reference images used for training");
    app.add_option("--pca-seed", cfg.pca_seed, "Seed of the randomized range finder");
}

void add_localizer_options(CLI::App& app, RunConfig& cfg)
{
    LocalizerConfig& l = cfg.localizer;
    app.add_option("--half-window", l.half_window, "Search window half-length along the path (m)");
    app.add_option("--sigma-threshold", l.sigma_threshold, "Rejection threshold on sigma_long / sigma_lat (m)");
    app.add_option("--sweep-min", l.heading_sweep.min, "Heading sweep start (deg)");
    app.add_option("--sweep-max", l.heading_sweep.max, "Heading sweep end (deg)");
    app.add_option("--sweep-step", l.heading_sweep.step, "Heading sweep step (deg)");
    app.add_option("--heading-weighting", cfg.heading_weighting, "Heading sweep weighting")
        ->check(CLI::IsMember({"thresholded", "normalized"}));
    app.add_option("--covariance-weighting", cfg.covariance_weighting, "Covariance weighting")
        ->check(CLI::IsMember({"rectified", "signed", "raw"}));
}

void add_trajectory_options(CLI::App& app, RunConfig& cfg)
{
    TrajectoryOptions& t = cfg.trajectory;
    app.add_option("--frame-spacing", t.frame_spacing, "Path distance between frames (m)");
    app.add_option("--start-arc", t.start_arc, "Arc length of the first frame (m)");
    app.add_option("--lateral-max", t.lateral_max, "Uniform lateral perturbation bound (m)");
    app.add_option("--heading-max", t.heading_max, "Uniform heading perturbation bound (deg)");
    app.add_option("--trajectory-seed", t.seed, "Trajectory perturbation seed");
    app.add_option("--eval-seed", cfg.eval_seed, "Lighting perturbation and alignment seed");
}

void apply_config_file(CLI::App& sub, const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw CLI::FileError::Missing(path.string());
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos && line.find('"') == std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        if (!section.empty() && section != sub.get_name()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw CLI::ConversionError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        CLI::Option* opt = nullptr;
        try {
            opt = sub.get_option("--" + key);
        } catch (const CLI::OptionNotFound&) {
            throw CLI::ConversionError(path.string() + ":" + std::to_string(lineno) + ": unknown key '" + key +
                                       "' for " + sub.get_name());
        }
        if (opt->count() > 0) continue;  // given on the command line
        opt->add_result(value);
        opt->run_callback();
    }
}

nlohmann::json effective_config(const CLI::App& sub)
{
    nlohmann::json cfg = nlohmann::json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config") continue;
        if (opt->count() > 0) {
            const auto& r = opt->results();
            cfg[name] = r.size() == 1 ? r.front() : CLI::detail::join(r, ",");
        } else {
            cfg[name] = opt->get_default_str();
        }
    }
    return cfg;
}

void write_manifest(const std::filesystem::path& dir, const CLI::App& sub, const std::vector<std::string>& outputs,
                    const nlohmann::json& extra)
{
    nlohmann::json m = {
        {"tool", sub.get_parent() ? sub.get_parent()->get_name() : sub.get_name()},
        {"subcommand", sub.get_name()},
        {"config", effective_config(sub)},
        {"outputs", outputs},
    };
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    std::filesystem::create_directories(dir);
    const auto path = dir / "manifest.json";
    std::ofstream out(path);
    out << m.dump(2) << '\n';
    if (!out) throw Error("cannot write " + path.string());
}

PathSpec parse_path(const std::string& waypoints, const std::string& segment_headings)
{
    if (waypoints.empty()) throw CLI::RequiredError("--waypoints");
    PathSpec path;
    for (const std::string& wp : split(waypoints, ';')) {
        const auto xy = split(wp, ',');
        if (xy.size() != 2) throw CLI::ValidationError("--waypoints", "expected x,y pairs, got '" + wp + "'");
        path.waypoints.push_back({parse_number(xy[0], "--waypoints"), parse_number(xy[1], "--waypoints")});
    }
    for (const std::string& h : split(segment_headings, ';')) {
        path.segment_headings.push_back(parse_number(h, "--segment-headings"));
    }
    try {
        path.validate();
    } catch (const InvalidArgument& e) {
        throw CLI::ValidationError("--waypoints", e.what());
    }
    return path;
}

PlanarPose parse_pose(const std::string& text)
{
    const auto parts = split(text, ',');
    if (parts.size() != 3) throw CLI::ValidationError("pose", "expected x,y,heading, got '" + text + "'");
    return PlanarPose(parse_number(parts[0], "pose"), parse_number(parts[1], "pose"), parse_number(parts[2], "pose"));
}

}  // namespace satloc::cli
