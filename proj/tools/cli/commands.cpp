#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>

#include "satloc/codebook.hpp"
#include "satloc/embedding_io.hpp"
#include "satloc/encoder.hpp"
#include "satloc/eval.hpp"
#include "satloc/image_io.hpp"
#include "satloc/parallel.hpp"
#include "satloc/simd/kernels.hpp"

namespace satloc::cli {
namespace fs = std::filesystem;
namespace {

fs::path require_out(const RunConfig& cfg, const CLI::App& sub)
{
    if (cfg.out.empty()) throw CLI::RequiredError(sub.get_name() + ": -o,--out");
    return cfg.out;
}

const std::string& require(const std::string& value, const std::string& flag)
{
    if (value.empty()) throw CLI::RequiredError(flag);
    return value;
}

LocalizerConfig localizer_config(const RunConfig& cfg)
{
    LocalizerConfig l = cfg.localizer;
    l.heading_weighting =
        cfg.heading_weighting == "normalized" ? HeadingWeighting::Normalized : HeadingWeighting::Thresholded;
    if (cfg.covariance_weighting == "signed") {
        l.covariance_weighting = CovarianceWeighting::SignedNormalized;
    } else if (cfg.covariance_weighting == "raw") {
        l.covariance_weighting = CovarianceWeighting::Raw;
    } else {
        l.covariance_weighting = CovarianceWeighting::RectifiedNormalized;
    }
    return l;
}

/// Codebook and encoder must both exist; the error names the missing path.
Codebook load_codebook_checked(const std::string& path)
{
    if (!fs::exists(require(path, "--codebook"))) throw Error("codebook not found: " + path);
    return load_codebook(path);
}

LinearEncoder load_encoder_checked(const std::string& path, const Codebook& cb)
{
    if (!fs::exists(require(path, "--encoder"))) throw Error("encoder not found: " + path);
    LinearEncoder enc = LinearEncoder::load(path);
    if (enc.id() != cb.encoder_id) {
        throw Error("encoder " + enc.id() + " does not match codebook encoder " + cb.encoder_id);
    }
    return enc;
}

std::string frame_name(std::uint64_t id)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%05llu.png", static_cast<unsigned long long>(id));
    return buf;
}

void run_build_map(const RunConfig& cfg, const CLI::App& sub)
{
    const fs::path dir = require_out(cfg, sub);
    MapSpec spec;
    spec.width_px = cfg.width;
    spec.height_px = cfg.height;
    spec.meters_per_pixel = cfg.mpp;
    spec.origin_x = cfg.origin_x;
    spec.origin_y = cfg.origin_y;
    spec.scene = cfg.scene;
    // Generate before touching the filesystem so bad parameters leave nothing behind.
    const MapRaster map = generate_map(spec, cfg.seed);
    fs::create_directories(dir);
    save_map(map, dir / cfg.name);
    write_manifest(dir, sub, {cfg.name + ".png", cfg.name + ".occ.png", cfg.name + ".json"});
    std::cout << "map " << (dir / cfg.name).string() << " " << map.width_px << "x" << map.height_px << " @ "
              << map.meters_per_pixel << " m/px\n";
}

void run_render(const RunConfig& cfg, const CLI::App& sub)
{
    const fs::path dir = require_out(cfg, sub);
    cfg.camera.validate();
    cfg.light.validate();
    const MapRaster map = load_map(require(cfg.map, "--map"));

    if (!cfg.pose.empty()) {
        const PlanarPose pose = parse_pose(cfg.pose);
        const Image img = render_view(map, pose, cfg.camera, cfg.light);
        fs::create_directories(dir);
        save_view(dir / "view.png", img, pose, cfg.camera, cfg.light);
        write_manifest(dir, sub, {"view.png", "view.json"});
        std::cout << "view " << (dir / "view.png").string() << "\n";
        return;
    }

    // Trajectory mode: perturbed frames along a path under one lighting condition.
    const PathSpec path = parse_path(require(cfg.waypoints, "--pose or --waypoints"), cfg.segment_headings);
    const std::vector<Frame> frames = make_trajectory(path, cfg.grid, cfg.trajectory);
    const LightingCondition cond = make_condition(cfg.condition.empty() ? "reference" : cfg.condition, cfg.light);
    ShadowLayer shadows;
    if (cond.base.shadow_length > 0.0) shadows = ShadowLayer(map, cond.base.sun_azimuth, cond.base.shadow_length);
    std::vector<Image> images(frames.size());
    parallel_for(frames.size(), cfg.threads, [&](std::size_t i) {
        images[i] = render_view(map, shadows, frames[i].truth, cfg.camera, cond.for_frame(frames[i].id, cfg.eval_seed));
    });

    fs::create_directories(dir / "frames");
    std::ofstream csv(dir / "trajectory.csv");
    csv << std::setprecision(17);
    csv << "frame_id,arc_length,truth_x,truth_y,truth_heading,prior_x,prior_y,prior_heading,image\n";
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        const PlanarPose prior = frame_prior(path, frames, i);
        const std::string name = frame_name(f.id);
        write_png(dir / "frames" / name, images[i]);
        csv << f.id << ',' << f.arc_length << ',' << f.truth.x << ',' << f.truth.y << ',' << f.truth.heading << ','
            << prior.x << ',' << prior.y << ',' << prior.heading << ",frames/" << name << '\n';
    }
    if (!csv) throw Error("cannot write " + (dir / "trajectory.csv").string());
    write_manifest(dir, sub, {"trajectory.csv", "frames/"}, {{"frames", frames.size()}, {"condition", cond.label}});
    std::cout << "rendered " << frames.size() << " frames to " << dir.string() << "\n";
}

void run_build_codebook(const RunConfig& cfg, const CLI::App& sub)
{
    const fs::path dir = require_out(cfg, sub);
    const PathSpec path = parse_path(cfg.waypoints, cfg.segment_headings);
    cfg.grid.validate();

    Codebook cb;
    std::vector<std::string> outputs{"codebook.klcb"};
    nlohmann::json extra;
    if (!cfg.import_embeddings.empty()) {
        if (!fs::exists(cfg.import_embeddings)) throw Error("embedding file not found: " + cfg.import_embeddings);
        const EmbeddingSet set = import_embeddings(cfg.import_embeddings);
        cb = codebook_from_embeddings(path, cfg.grid, set, cfg.encoder_id);
        fs::create_directories(dir);
    } else {
        cfg.camera.validate();
        cfg.light.validate();
        const MapRaster map = load_map(require(cfg.map, "--map"));
        const std::vector<GridPose> grid_poses = enumerate_grid(path, cfg.grid);
        std::vector<Image> training =
            render_training_set(map, grid_poses, cfg.camera, cfg.light, cfg.train_images, cfg.threads);
        PcaOptions pca;
        pca.seed = cfg.pca_seed;
        const LinearEncoder enc = train_linear_encoder(training, cfg.dim, pca);
        extra["training_images"] = training.size();
        training.clear();
        training.shrink_to_fit();
        cb = build_codebook(map, path, cfg.grid, cfg.camera, enc, cfg.light, cfg.threads);
        fs::create_directories(dir);
        enc.save(dir / "encoder.klen");
        outputs.push_back("encoder.klen");
    }
    save_codebook(cb, dir / "codebook.klcb");
    extra["columns"] = cb.count();
    extra["dim"] = cb.dim();
    extra["encoder_id"] = cb.encoder_id;
    extra["codebook_bytes"] = fs::file_size(dir / "codebook.klcb");
    write_manifest(dir, sub, outputs, extra);
    std::cout << "codebook " << (dir / "codebook.klcb").string() << " N=" << cb.count() << " D=" << cb.dim()
              << "\n";
}

struct BatchFrame {
    std::uint64_t id = 0;
    PlanarPose truth;
    PlanarPose prior;
    fs::path image;
};

std::vector<BatchFrame> read_trajectory(const fs::path& dir)
{
    const fs::path csv = dir / "trajectory.csv";
    std::ifstream in(csv);
    if (!in) throw Error("trajectory index not found: " + csv.string());
    std::string line;
    std::getline(in, line);
    std::vector<BatchFrame> frames;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 9) throw Error(csv.string() + ": malformed row '" + line + "'");
        BatchFrame b;
        b.id = std::stoull(f[0]);
        b.truth = PlanarPose(std::stod(f[2]), std::stod(f[3]), std::stod(f[4]));
        b.prior = PlanarPose(std::stod(f[5]), std::stod(f[6]), std::stod(f[7]));
        b.image = dir / f[8];
        frames.push_back(std::move(b));
    }
    return frames;
}

void run_localize(const RunConfig& cfg, const CLI::App& sub)
{
    const Codebook cb = load_codebook_checked(cfg.codebook);
    const LinearEncoder enc = load_encoder_checked(cfg.encoder, cb);
    const LocalizerConfig lc = localizer_config(cfg);

    std::vector<std::uint64_t> ids;
    std::vector<std::optional<PlanarPose>> truths;
    std::vector<LocalizationEstimate> estimates;
    if (!cfg.frames.empty()) {
        const std::vector<BatchFrame> frames = read_trajectory(cfg.frames);
        estimates.resize(frames.size());
        parallel_for(frames.size(), cfg.threads, [&](std::size_t i) {
            estimates[i] = localize(cb, frames[i].prior, read_png(frames[i].image), enc, lc);
        });
        for (const BatchFrame& f : frames) {
            ids.push_back(f.id);
            truths.emplace_back(f.truth);
        }
    } else {
        const Image img = read_png(require(cfg.image, "--image or --frames"));
        estimates.push_back(localize(cb, parse_pose(require(cfg.prior, "--prior")), img, enc, lc));
        ids.push_back(0);
        truths.emplace_back(std::nullopt);
    }

    auto emit = [&](std::ostream& out) {
        out << std::setprecision(17);
        write_estimate_csv_header(out);
        for (std::size_t i = 0; i < estimates.size(); ++i) write_estimate_csv_row(out, ids[i], truths[i], estimates[i]);
    };
    if (cfg.out.empty()) {
        emit(std::cout);
        return;
    }
    const fs::path dir = cfg.out;
    fs::create_directories(dir);
    std::ofstream out(dir / "estimates.csv");
    emit(out);
    if (!out) throw Error("cannot write " + (dir / "estimates.csv").string());
    std::size_t accepted = 0;
    for (const auto& e : estimates) accepted += e.accepted ? 1 : 0;
    write_manifest(dir, sub, {"estimates.csv"}, {{"frames", estimates.size()}, {"accepted", accepted}});
    std::cout << "localized " << estimates.size() << " frames, " << accepted << " accepted\n";
}

void run_evaluate(const RunConfig& cfg, const CLI::App& sub)
{
    const fs::path dir = require_out(cfg, sub);
    const Codebook cb = load_codebook_checked(cfg.codebook);
    const LinearEncoder enc = load_encoder_checked(cfg.encoder, cb);
    const MapRaster map = load_map(require(cfg.map, "--map"));
    const PathSpec path = parse_path(cfg.waypoints, cfg.segment_headings);
    cfg.light.validate();

    std::vector<LightingCondition> conditions;
    for (const std::string& name : split(cfg.conditions, ',')) conditions.push_back(make_condition(name, cfg.light));
    const std::vector<Frame> trajectory = make_trajectory(path, cb.grid, cfg.trajectory);

    ExperimentConfig ec;
    ec.localizer = localizer_config(cfg);
    ec.camera = cfg.camera;
    ec.align_fraction = cfg.align_fraction;
    ec.seed = cfg.eval_seed;
    ec.threads = cfg.threads;
    std::vector<RunResult> runs;
    const std::vector<EvalReport> reports =
        run_experiment(map, path, cb, enc, trajectory, conditions, ec, fs::file_size(cfg.encoder), &runs);

    fs::create_directories(dir);
    std::vector<std::string> outputs;
    const nlohmann::json config = effective_config(sub);
    for (std::size_t c = 0; c < reports.size(); ++c) {
        const std::string& label = reports[c].condition;
        write_frames_csv(dir / ("frames_" + label + ".csv"), runs[c]);
        write_error_series_csv(dir / ("errors_" + label + ".csv"), runs[c]);
        nlohmann::json rep = to_json(reports[c]);
        rep["config"] = config;
        std::ofstream out(dir / ("report_" + label + ".json"));
        out << rep.dump(2) << '\n';
        if (!out) throw Error("cannot write report for " + label);
        outputs.insert(outputs.end(), {"frames_" + label + ".csv", "errors_" + label + ".csv",
                                       "report_" + label + ".json"});

        const EvalReport& r = reports[c];
        std::cout << std::fixed << std::setprecision(3) << label << ": success " << r.success_rate
                  << "%  rmse(success) lon " << r.success.rmse_x << " m, lat " << r.success.rmse_y << " m, heading "
                  << r.success.rmse_heading << " deg  mean frame " << r.runtime.mean_total_ms << " ms\n";
    }
    write_manifest(dir, sub, outputs, {{"frames", trajectory.size()}});
}

void run_bench(const RunConfig& cfg, const CLI::App& sub)
{
    if (cfg.bench_dim < 1 || cfg.bench_window < 1 || cfg.iters < 1) {
        throw CLI::ValidationError("bench", "--dim, --window and --iters must be >= 1");
    }
    const auto d = static_cast<std::size_t>(cfg.bench_dim);
    const auto m = static_cast<std::size_t>(cfg.bench_window);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = g(rng);
    std::vector<double> live(d);
    for (double& v : live) v = g(rng);
    std::vector<std::size_t> cols(m);
    for (std::size_t j = 0; j < m; ++j) cols[j] = j;

    std::vector<simd::Isa> isas;
    for (simd::Isa isa : {simd::Isa::Scalar, simd::Isa::Avx2, simd::Isa::Neon}) {
        if (!simd::isa_available(isa)) continue;
        if (cfg.isa == "all" || cfg.isa == simd::isa_name(isa)) isas.push_back(isa);
    }
    if (isas.empty()) throw Error("no available kernel ISA matches '" + cfg.isa + "'");

    nlohmann::json results = nlohmann::json::array();
    std::vector<double> w(m);
    for (simd::Isa isa : isas) {
        const simd::KernelTable& k = simd::kernels(isa);
        k.gather_dot(y.data(), d, cols.data(), m, live.data(), w.data());  // warm-up
        const auto t0 = std::chrono::steady_clock::now();
        for (int it = 0; it < cfg.iters; ++it) k.gather_dot(y.data(), d, cols.data(), m, live.data(), w.data());
        const double total_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        double checksum = 0.0;
        for (double v : w) checksum += v;
        const double mean_ms = total_ms / cfg.iters;
        results.push_back({{"isa", std::string(simd::isa_name(isa))}, {"mean_ms", mean_ms}, {"checksum", checksum}});
        std::cout << std::setw(7) << simd::isa_name(isa) << "  D=" << d << " M=" << m << "  mean " << std::fixed
                  << std::setprecision(4) << mean_ms << " ms per kernel  checksum " << std::setprecision(9)
                  << checksum << "\n";
    }
    if (!cfg.out.empty()) {
        const fs::path dir = cfg.out;
        fs::create_directories(dir);
        std::ofstream out(dir / "bench.json");
        out << nlohmann::json{{"dim", d}, {"window", m}, {"iters", cfg.iters}, {"results", results}}.dump(2) << '\n';
        write_manifest(dir, sub, {"bench.json"});
    }
}

CLI::App* new_subcommand(CLI::App& parent, const std::string& name, const std::string& help, RunConfig& cfg)
{
    CLI::App* sub = parent.add_subcommand(name, help);
    add_common_options(*sub, cfg);
    return sub;
}

}  // namespace

Command add_build_map(CLI::App& parent, const std::string& name, RunConfig& cfg)
{
    CLI::App* sub = new_subcommand(parent, name, "Generate a synthetic orthophoto map", cfg);
    add_output_option(*sub, cfg);
    add_map_generation_options(*sub, cfg);
    return {sub, [&cfg, sub] { run_build_map(cfg, *sub); }};
}

Command add_render(CLI::App& parent, const std::string& name, RunConfig& cfg)
{
    CLI::App* sub = new_subcommand(parent, name, "Render one view (--pose) or a perturbed trajectory (--waypoints)", cfg);
    add_output_option(*sub, cfg);
    sub->add_option("--map", cfg.map, "Map base path");
    sub->add_option("--pose", cfg.pose, "Single view pose x,y,heading");
    sub->add_option("--condition", cfg.condition, "Trajectory lighting condition (reference, matched, flipped)");
    add_path_grid_options(*sub, cfg);
    add_camera_options(*sub, cfg);
    add_lighting_options(*sub, cfg);
    add_trajectory_options(*sub, cfg);
    return {sub, [&cfg, sub] { run_render(cfg, *sub); }};
}

Command add_build_codebook(CLI::App& parent, RunConfig& cfg)
{
    CLI::App* sub = new_subcommand(parent, "build-codebook", "Train the linear encoder and encode the reference grid", cfg);
    add_output_option(*sub, cfg);
    sub->add_option("--map", cfg.map, "Map base path");
    sub->add_option("--import-embeddings", cfg.import_embeddings, "Build from an EMBX file instead of the encoder");
    sub->add_option("--encoder-id", cfg.encoder_id, "Encoder id recorded for imported embeddings");
    add_path_grid_options(*sub, cfg);
    add_camera_options(*sub, cfg);
    add_lighting_options(*sub, cfg);
    add_encoder_options(*sub, cfg);
    return {sub, [&cfg, sub] { run_build_codebook(cfg, *sub); }};
}

Command add_localize(CLI::App& parent, RunConfig& cfg)
{
    CLI::App* sub = new_subcommand(parent, "localize", "Localize one image (--image, --prior) or a frame batch", cfg);
    add_output_option(*sub, cfg);
    sub->add_option("--codebook", cfg.codebook, "Codebook file");
    sub->add_option("--encoder", cfg.encoder, "Encoder model file");
    sub->add_option("--image", cfg.image, "Live image PNG");
    sub->add_option("--prior", cfg.prior, "Prior pose x,y,heading");
    sub->add_option("--frames", cfg.frames, "Directory written by render --waypoints");
    add_localizer_options(*sub, cfg);
    return {sub, [&cfg, sub] { run_localize(cfg, *sub); }};
}

Command add_evaluate(CLI::App& parent, RunConfig& cfg)
{
    CLI::App* sub = new_subcommand(parent, "evaluate", "Closed-loop experiment over lighting conditions", cfg);
    add_output_option(*sub, cfg);
    sub->add_option("--map", cfg.map, "Map base path");
    sub->add_option("--codebook", cfg.codebook, "Codebook file");
    sub->add_option("--encoder", cfg.encoder, "Encoder model file");
    sub->add_option("--conditions", cfg.conditions, "Comma-separated lighting conditions");
    sub->add_option("--align-fraction", cfg.align_fraction, "Fraction of successes used for frame alignment");
    add_path_grid_options(*sub, cfg);
    add_camera_options(*sub, cfg);
    add_lighting_options(*sub, cfg);
    add_localizer_options(*sub, cfg);
    add_trajectory_options(*sub, cfg);
    return {sub, [&cfg, sub] { run_evaluate(cfg, *sub); }};
}

Command add_bench(CLI::App& parent, RunConfig& cfg)
{
    CLI::App* sub = new_subcommand(parent, "bench", "Time the inner-product kernel per instruction set", cfg);
    add_output_option(*sub, cfg);
    sub->add_option("--dim", cfg.bench_dim, "Embedding dimension");
    sub->add_option("--window", cfg.bench_window, "Window column count");
    sub->add_option("--iters", cfg.iters, "Timed iterations");
    sub->add_option("--isa", cfg.isa, "all, scalar, avx2 or neon");
    sub->add_option("--seed", cfg.seed, "Data seed");
    return {sub, [&cfg, sub] { run_bench(cfg, *sub); }};
}

int run_tool(CLI::App& app, std::vector<Command>& commands, int argc, char** argv)
{
    app.require_subcommand(1);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    for (Command& cmd : commands) {
        if (!cmd.app->parsed()) continue;
        try {
            auto* cfg_opt = cmd.app->get_option("--config");
            if (cfg_opt->count() > 0) apply_config_file(*cmd.app, cfg_opt->as<std::string>());
            cmd.run();
        } catch (const CLI::Error& e) {
            std::cerr << app.get_name() << " " << cmd.app->get_name() << ": " << e.what() << "\n";
            return kExitUsage;
        } catch (const std::exception& e) {
            std::cerr << app.get_name() << " " << cmd.app->get_name() << ": error: " << e.what() << "\n";
            return kExitRuntime;
        }
        return kExitOk;
    }
    return kExitUsage;
}

}  // namespace satloc::cli
