#pragma once
// Full-path experiments against synthetic ground truth.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "satloc/codebook.hpp"
#include "satloc/encoder.hpp"
#include "satloc/localizer.hpp"
#include "satloc/map_synth.hpp"

namespace satloc {

struct TrajectoryOptions {
    double frame_spacing = 1.0;   ///< meters of path between frames
    double start_arc = 1.0;       ///< arc length of the first frame
    double end_margin = 0.5;      ///< frames stop this far before the last grid station
    double lateral_max = 2.0;     ///< truth lateral offset ~ U[-lateral_max, lateral_max]
    double heading_max = 3.0;     ///< truth heading offset ~ U[-heading_max, heading_max]
    std::uint64_t seed = 1;
};

struct Frame {
    std::uint64_t id = 0;
    PlanarPose truth;
    double arc_length = 0.0;
};

std::vector<Frame> make_trajectory(const PathSpec& path, const GridSpec& grid, const TrajectoryOptions& opts);

/// Prior of frame i: the previous frame's truth; for the first frame, the path
/// centerline one frame spacing earlier.
PlanarPose frame_prior(const PathSpec& path, std::span<const Frame> trajectory, std::size_t i);

/// A named live-image regime. Per frame, gain and gamma are drawn uniformly
/// from their ranges and the noise seed is derived from (seed, frame id).
struct LightingCondition {
    std::string label;
    LightingSpec base;
    double gain_min = 1.0;
    double gain_max = 1.0;
    double gamma_min = 1.0;
    double gamma_max = 1.0;

    LightingSpec for_frame(std::uint64_t frame_id, std::uint64_t seed) const;
};

/// "reference": exactly the reference lighting, noiseless.
/// "matched":   same sun as the reference, gain/gamma in [0.8, 1.25], noise 0.02.
/// "flipped":   as matched with the sun azimuth rotated by 180 degrees.
/// Throws InvalidArgument for other names.
LightingCondition make_condition(const std::string& name, const LightingSpec& reference);

struct ExperimentConfig {
    LocalizerConfig localizer;
    CameraSpec camera;
    double align_fraction = 0.10;
    std::uint64_t seed = 1;       ///< lighting perturbation and alignment sampling
    unsigned threads = 1;
};

struct FrameResult {
    Frame frame;
    PlanarPose prior;
    LocalizationEstimate estimate;
    bool excluded = false;        ///< used for frame alignment, not scored
    std::string error;            ///< non-empty when the frame failed outright
};

struct Offset {
    double dx = 0.0;
    double dy = 0.0;
};

struct RunResult {
    std::string condition;
    std::vector<FrameResult> frames;
    Offset offset;
};

struct ErrorStats {
    double rmse_x = 0.0;        ///< longitude, meters
    double rmse_y = 0.0;        ///< latitude, meters
    double rmse_heading = 0.0;  ///< degrees, wrapped differences
    std::size_t frames = 0;
};

struct StorageAccounting {
    std::size_t codebook_bytes = 0;
    std::size_t header_bytes = 0;
    std::size_t bytes_per_image = 0;
    std::size_t embedding_bytes_per_image = 0;
    std::size_t pose_bytes_per_image = 0;
    double images_per_meter = 0.0;
    double bytes_per_meter = 0.0;
    std::size_t fixed_bytes = 0;     ///< encoder model
    std::size_t total_bytes = 0;
};

struct RuntimeAccounting {
    double mean_total_ms = 0.0;
    double p50_total_ms = 0.0;
    double p95_total_ms = 0.0;
    double mean_encode_ms = 0.0;
    double mean_kernel_ms = 0.0;
    double mean_heading_ms = 0.0;
};

struct EvalReport {
    std::string condition;
    std::size_t total_frames = 0;
    std::size_t accepted_frames = 0;
    std::size_t excluded_frames = 0;
    double success_rate = 0.0;   ///< percent of all frames accepted
    Offset offset;
    ErrorStats all;
    ErrorStats success;
    StorageAccounting storage;
    RuntimeAccounting runtime;
};

/// Seeded uniform sample without replacement of ceil(fraction * successes)
/// accepted frames; returns mean(truth - estimate) over the sample and flags
/// the sampled frames excluded. Throws InvalidArgument with < 10 successes.
Offset align_frames(RunResult& run, double fraction, std::uint64_t seed);

struct RmseResult {
    ErrorStats all;
    ErrorStats success;
};

/// RMSE of (estimate + offset) - truth over non-excluded frames: `all` over
/// every one of them, `success` over the accepted ones. Throws
/// InvalidArgument when no frame is left to score.
RmseResult compute_rmse(const RunResult& run, Offset offset);

/// Render and localize every trajectory frame under one lighting condition,
/// using the previous frame's truth as the prior.
RunResult run_condition(const MapRaster& map, const PathSpec& path, const Codebook& cb, const Encoder& encoder,
                        std::span<const Frame> trajectory, const LightingCondition& condition,
                        const ExperimentConfig& config);

/// Runs every condition, aligns, scores and accounts. `runs`, when given,
/// receives the per-frame results in condition order.
std::vector<EvalReport> run_experiment(const MapRaster& map, const PathSpec& path, const Codebook& cb,
                                       const Encoder& encoder, std::span<const Frame> trajectory,
                                       std::span<const LightingCondition> conditions, const ExperimentConfig& config,
                                       std::size_t encoder_bytes, std::vector<RunResult>* runs = nullptr);

struct Accounting {
    StorageAccounting storage;
    RuntimeAccounting runtime;
};

/// Per-image cost from the serialized codebook size, per-meter cost from the
/// grid density, fixed cost = encoder model bytes, latency stats from the
/// recorded stage timings.
Accounting account_storage_and_runtime(const Codebook& cb, const RunResult& run, std::size_t encoder_bytes);

// --- output files --------------------------------------------------------------

void write_estimate_csv_header(std::ostream& out);
void write_estimate_csv_row(std::ostream& out, std::uint64_t frame_id, const std::optional<PlanarPose>& truth,
                            const LocalizationEstimate& est);
void write_frames_csv(const std::filesystem::path& path, const RunResult& run);

/// Error series for plotting: aligned error per axis, +-3 sigma envelope,
/// rejection and alignment flags, by arc length.
void write_error_series_csv(const std::filesystem::path& path, const RunResult& run);

nlohmann::json to_json(const EvalReport& report);

}  // namespace satloc
