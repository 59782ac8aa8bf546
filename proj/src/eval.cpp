#include "satloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <iomanip>
#include <numeric>
#include <random>

#include "satloc/parallel.hpp"

namespace satloc {
namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi)
{
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

struct FrameError {
    double ex, ey, eh;
};

FrameError frame_error(const FrameResult& f, Offset offset)
{
    return {f.estimate.x + offset.dx - f.frame.truth.x, f.estimate.y + offset.dy - f.frame.truth.y,
            angle_diff_degrees(f.estimate.heading, f.frame.truth.heading)};
}

ErrorStats finish(double sx, double sy, double sh, std::size_t n)
{
    ErrorStats s;
    s.frames = n;
    if (n == 0) {
        s.rmse_x = s.rmse_y = s.rmse_heading = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    const auto d = static_cast<double>(n);
    s.rmse_x = std::sqrt(sx / d);
    s.rmse_y = std::sqrt(sy / d);
    s.rmse_heading = std::sqrt(sh / d);
    return s;
}

double percentile(std::vector<double> v, double q)
{
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    // Nearest-rank.
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

nlohmann::json stats_json(const ErrorStats& s)
{
    const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"frames", s.frames},
            {"rmse_longitude_m", num(s.rmse_x)},
            {"rmse_latitude_m", num(s.rmse_y)},
            {"rmse_heading_deg", num(s.rmse_heading)}};
}

std::ofstream open_csv(const std::filesystem::path& path)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}

}  // namespace

std::vector<Frame> make_trajectory(const PathSpec& path, const GridSpec& grid, const TrajectoryOptions& opts)
{
    path.validate();
    grid.validate();
    if (!(opts.frame_spacing > 0.0)) throw InvalidArgument("trajectory: frame_spacing must be positive");
    if (!(opts.lateral_max >= 0.0) || !(opts.heading_max >= 0.0)) {
        throw InvalidArgument("trajectory: perturbation bounds must be >= 0");
    }
    const double last_station = static_cast<double>(station_count(path, grid) - 1) * grid.along_spacing;
    const double end = last_station - opts.end_margin;
    std::mt19937_64 rng(opts.seed);
    std::vector<Frame> frames;
    for (std::uint64_t i = 0;; ++i) {
        const double s = opts.start_arc + static_cast<double>(i) * opts.frame_spacing;
        if (s > end + 1e-9) break;
        const double lateral = uniform(rng, -opts.lateral_max, opts.lateral_max);
        const double dh = uniform(rng, -opts.heading_max, opts.heading_max);
        const PlanarPose base = path.pose_at(s, lateral);
        frames.push_back({i, PlanarPose(base.x, base.y, base.heading + dh), s});
    }
    return frames;
}

PlanarPose frame_prior(const PathSpec& path, std::span<const Frame> trajectory, std::size_t i)
{
    if (i >= trajectory.size()) throw InvalidArgument("frame_prior: frame index out of range");
    if (i > 0) return trajectory[i - 1].truth;
    const double spacing = trajectory.size() > 1 ? trajectory[1].arc_length - trajectory[0].arc_length : 1.0;
    return path.pose_at(std::max(0.0, trajectory[0].arc_length - spacing));
}

LightingSpec LightingCondition::for_frame(std::uint64_t frame_id, std::uint64_t seed) const
{
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(frame_id)));
    LightingSpec l = base;
    l.brightness_gain = uniform(rng, gain_min, gain_max);
    l.gamma = uniform(rng, gamma_min, gamma_max);
    l.noise_seed = rng();
    return l;
}

LightingCondition make_condition(const std::string& name, const LightingSpec& reference)
{
    LightingCondition c;
    c.label = name;
    c.base = reference;
    if (name == "reference") return c;
    if (name != "matched" && name != "flipped") {
        throw InvalidArgument("unknown lighting condition '" + name + "' (expected reference, matched, flipped)");
    }
    c.gain_min = c.gamma_min = 0.8;
    c.gain_max = c.gamma_max = 1.25;
    c.base.noise_sigma = 0.02;
    if (name == "flipped") c.base.sun_azimuth = normalize_degrees(reference.sun_azimuth + 180.0);
    return c;
}

Offset align_frames(RunResult& run, double fraction, std::uint64_t seed)
{
    if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("align_frames: fraction must be in (0, 1]");
    std::vector<std::size_t> accepted;
    for (std::size_t i = 0; i < run.frames.size(); ++i) {
        run.frames[i].excluded = false;
        if (run.frames[i].estimate.accepted) accepted.push_back(i);
    }
    if (accepted.size() < 10) {
        throw InvalidArgument("align_frames: " + std::to_string(accepted.size()) +
                              " successful registrations, need at least 10");
    }
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(accepted.size()) - 1e-9));
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> sample;
    std::sample(accepted.begin(), accepted.end(), std::back_inserter(sample), k, rng);

    Offset off;
    for (std::size_t i : sample) {
        FrameResult& f = run.frames[i];
        f.excluded = true;
        off.dx += f.frame.truth.x - f.estimate.x;
        off.dy += f.frame.truth.y - f.estimate.y;
    }
    off.dx /= static_cast<double>(sample.size());
    off.dy /= static_cast<double>(sample.size());
    run.offset = off;
    return off;
}

RmseResult compute_rmse(const RunResult& run, Offset offset)
{
    double ax = 0, ay = 0, ah = 0, sx = 0, sy = 0, sh = 0;
    std::size_t na = 0, ns = 0;
    for (const FrameResult& f : run.frames) {
        if (f.excluded) continue;
        const FrameError e = frame_error(f, offset);
        ax += e.ex * e.ex;
        ay += e.ey * e.ey;
        ah += e.eh * e.eh;
        ++na;
        if (f.estimate.accepted) {
            sx += e.ex * e.ex;
            sy += e.ey * e.ey;
            sh += e.eh * e.eh;
            ++ns;
        }
    }
    if (na == 0) throw InvalidArgument("compute_rmse: empty evaluation set");
    return {finish(ax, ay, ah, na), finish(sx, sy, sh, ns)};
}

RunResult run_condition(const MapRaster& map, const PathSpec& path, const Codebook& cb, const Encoder& encoder,
                        std::span<const Frame> trajectory, const LightingCondition& condition,
                        const ExperimentConfig& config)
{
    condition.base.validate();
    config.camera.validate();
    ShadowLayer shadows;
    if (condition.base.shadow_length > 0.0) {
        shadows = ShadowLayer(map, condition.base.sun_azimuth, condition.base.shadow_length);
    }

    RunResult run;
    run.condition = condition.label;
    run.frames.resize(trajectory.size());
    parallel_for(trajectory.size(), config.threads, [&](std::size_t i) {
        FrameResult& r = run.frames[i];
        r.frame = trajectory[i];
        r.prior = frame_prior(path, trajectory, i);
        try {
            const LightingSpec light = condition.for_frame(r.frame.id, config.seed);
            const Image live = render_view(map, shadows, r.frame.truth, config.camera, light);
            r.estimate = localize(cb, r.prior, live, encoder, config.localizer);
        } catch (const Error& e) {
            r.error = e.what();
            r.estimate = LocalizationEstimate{};
            r.estimate.x = r.prior.x;
            r.estimate.y = r.prior.y;
            r.estimate.heading = r.prior.heading;
            r.estimate.degenerate = true;
        }
    });
    return run;
}

std::vector<EvalReport> run_experiment(const MapRaster& map, const PathSpec& path, const Codebook& cb,
                                       const Encoder& encoder, std::span<const Frame> trajectory,
                                       std::span<const LightingCondition> conditions, const ExperimentConfig& config,
                                       std::size_t encoder_bytes, std::vector<RunResult>* runs)
{
    std::vector<EvalReport> reports;
    if (conditions.empty()) return reports;
    if (encoder.dim() != cb.dim() || encoder.id() != cb.encoder_id) {
        throw InvalidArgument("run_experiment: encoder '" + encoder.id() + "' does not match codebook encoder '" +
                              cb.encoder_id + "'");
    }
    for (const LightingCondition& cond : conditions) {
        RunResult run = run_condition(map, path, cb, encoder, trajectory, cond, config);
        EvalReport rep;
        rep.condition = cond.label;
        rep.total_frames = run.frames.size();
        for (const FrameResult& f : run.frames) rep.accepted_frames += f.estimate.accepted ? 1 : 0;
        rep.success_rate = rep.total_frames
                               ? 100.0 * static_cast<double>(rep.accepted_frames) / static_cast<double>(rep.total_frames)
                               : 0.0;
        Offset off;
        if (rep.accepted_frames >= 10) off = align_frames(run, config.align_fraction, config.seed);
        rep.offset = off;
        for (const FrameResult& f : run.frames) rep.excluded_frames += f.excluded ? 1 : 0;
        if (rep.total_frames > rep.excluded_frames) {
            const RmseResult rmse = compute_rmse(run, off);
            rep.all = rmse.all;
            rep.success = rmse.success;
        }
        const Accounting acc = account_storage_and_runtime(cb, run, encoder_bytes);
        rep.storage = acc.storage;
        rep.runtime = acc.runtime;
        reports.push_back(std::move(rep));
        if (runs) runs->push_back(std::move(run));
    }
    return reports;
}

Accounting account_storage_and_runtime(const Codebook& cb, const RunResult& run, std::size_t encoder_bytes)
{
    Accounting acc;
    StorageAccounting& s = acc.storage;
    s.codebook_bytes = serialize_codebook(cb).size();
    s.header_bytes = codebook_fixed_bytes(cb.encoder_id);
    s.bytes_per_image = cb.count() ? (s.codebook_bytes - s.header_bytes) / cb.count() : 0;
    s.pose_bytes_per_image = kPoseRecordBytes;
    s.embedding_bytes_per_image = s.bytes_per_image - kPoseRecordBytes;
    s.images_per_meter = static_cast<double>(cb.grid.lateral_count()) / cb.grid.along_spacing;
    s.bytes_per_meter = s.images_per_meter * static_cast<double>(s.bytes_per_image);
    s.fixed_bytes = encoder_bytes;
    s.total_bytes = s.codebook_bytes + encoder_bytes;

    RuntimeAccounting& r = acc.runtime;
    std::vector<double> totals;
    double enc = 0, ker = 0, head = 0;
    for (const FrameResult& f : run.frames) {
        if (!f.error.empty()) continue;
        totals.push_back(f.estimate.timing.total_us / 1000.0);
        enc += f.estimate.timing.encode_us;
        ker += f.estimate.timing.kernel_us;
        head += f.estimate.timing.heading_us;
    }
    if (!totals.empty()) {
        const auto n = static_cast<double>(totals.size());
        r.mean_total_ms = std::accumulate(totals.begin(), totals.end(), 0.0) / n;
        r.p50_total_ms = percentile(totals, 0.50);
        r.p95_total_ms = percentile(totals, 0.95);
        r.mean_encode_ms = enc / n / 1000.0;
        r.mean_kernel_ms = ker / n / 1000.0;
        r.mean_heading_ms = head / n / 1000.0;
    }
    return acc;
}

void write_estimate_csv_header(std::ostream& out)
{
    out << "frame_id,truth_x,truth_y,truth_heading,est_x,est_y,est_heading,sigma_long,sigma_lat,accepted,"
           "best_ref_index,window_us,encode_us,kernel_us,threshold_us,position_us,covariance_us,heading_us,"
           "total_us\n";
}

void write_estimate_csv_row(std::ostream& out, std::uint64_t frame_id, const std::optional<PlanarPose>& truth,
                            const LocalizationEstimate& est)
{
    out << frame_id << ',';
    if (truth) {
        out << truth->x << ',' << truth->y << ',' << truth->heading << ',';
    } else {
        out << ",,,";
    }
    const StageTimings& t = est.timing;
    out << est.x << ',' << est.y << ',' << est.heading << ',' << est.sigma_long << ',' << est.sigma_lat << ','
        << (est.accepted ? 1 : 0) << ',' << est.best_ref_index << ',' << t.window_us << ',' << t.encode_us << ','
        << t.kernel_us << ',' << t.threshold_us << ',' << t.position_us << ',' << t.covariance_us << ','
        << t.heading_us << ',' << t.total_us << '\n';
}

void write_frames_csv(const std::filesystem::path& path, const RunResult& run)
{
    std::ofstream out = open_csv(path);
    write_estimate_csv_header(out);
    for (const FrameResult& f : run.frames) write_estimate_csv_row(out, f.frame.id, f.frame.truth, f.estimate);
    if (!out) throw Error("write failed: " + path.string());
}

void write_error_series_csv(const std::filesystem::path& path, const RunResult& run)
{
    std::ofstream out = open_csv(path);
    out << "frame_id,arc_length,err_x,err_y,err_heading,three_sigma_x,three_sigma_y,rejected,excluded\n";
    for (const FrameResult& f : run.frames) {
        const FrameError e = frame_error(f, run.offset);
        out << f.frame.id << ',' << f.frame.arc_length << ',' << e.ex << ',' << e.ey << ',' << e.eh << ','
            << 3.0 * f.estimate.sigma_long << ',' << 3.0 * f.estimate.sigma_lat << ','
            << (f.estimate.accepted ? 0 : 1) << ',' << (f.excluded ? 1 : 0) << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

nlohmann::json to_json(const EvalReport& r)
{
    const StorageAccounting& s = r.storage;
    const RuntimeAccounting& t = r.runtime;
    return {
        {"condition", r.condition},
        {"frames", {{"total", r.total_frames}, {"accepted", r.accepted_frames}, {"excluded", r.excluded_frames}}},
        {"success_rate_percent", r.success_rate},
        {"alignment_offset", {{"dx", r.offset.dx}, {"dy", r.offset.dy}}},
        {"all_registrations", stats_json(r.all)},
        {"successful_registrations", stats_json(r.success)},
        {"storage",
         {{"codebook_bytes", s.codebook_bytes},
          {"header_bytes", s.header_bytes},
          {"bytes_per_image", s.bytes_per_image},
          {"embedding_bytes_per_image", s.embedding_bytes_per_image},
          {"pose_bytes_per_image", s.pose_bytes_per_image},
          {"images_per_meter", s.images_per_meter},
          {"bytes_per_meter", s.bytes_per_meter},
          {"fixed_bytes", s.fixed_bytes},
          {"total_bytes", s.total_bytes}}},
        {"runtime_ms",
         {{"mean_total", t.mean_total_ms},
          {"p50_total", t.p50_total_ms},
          {"p95_total", t.p95_total_ms},
          {"mean_encode", t.mean_encode_ms},
          {"mean_kernel", t.mean_kernel_ms},
          {"mean_heading", t.mean_heading_ms}}},
    };
}

}  // namespace satloc
