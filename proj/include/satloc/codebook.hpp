#pragma once
// Pose-tagged embedding matrix carried on board.
//
// File layout (little-endian):
//   "KLCB"  u16 version = 1  u32 D  u64 N
//   u16 len + UTF-8 encoder_id
//   f64 along_spacing, f64 lateral_extent, f64 lateral_spacing
//   N x { f64 x, f64 y, f64 heading, f64 arc_length }
//   N * D binary16 values, column-major (column i = reference i)
//   u32 CRC-32 of every preceding byte

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "satloc/embedding_io.hpp"
#include "satloc/encoder.hpp"
#include "satloc/grid.hpp"
#include "satloc/map_synth.hpp"

namespace satloc {

inline constexpr std::size_t kPoseRecordBytes = 32;

struct Codebook {
    GridSpec grid;
    std::string encoder_id;
    std::vector<PlanarPose> poses;
    std::vector<double> arc_length;
    /// D x N, column i belongs to poses[i]. Held in double precision; the
    /// file stores binary16.
    Eigen::MatrixXd embeddings;

    int dim() const { return static_cast<int>(embeddings.rows()); }
    std::size_t count() const { return poses.size(); }
    std::size_t station_count() const;

    /// Throws InvalidArgument when the table sizes or the along-major /
    /// lateral-minor station layout are inconsistent.
    void validate() const;

    /// Round every embedding through binary16 so the in-memory codebook equals
    /// what a save/load cycle yields.
    void quantize();
};

/// Render every grid pose under `light`, encode it and stack the results.
/// Errors from rendering or encoding are rethrown naming the pose index.
Codebook build_codebook(const MapRaster& map, const PathSpec& path, const GridSpec& grid,
                        const CameraSpec& cam, const Encoder& encoder, const LightingSpec& light,
                        unsigned threads = 1);

/// Codebook from externally produced embeddings; record ids are grid column
/// indices and must cover 0..N-1 exactly once.
Codebook codebook_from_embeddings(const PathSpec& path, const GridSpec& grid, const EmbeddingSet& set,
                                  std::string encoder_id);

/// Reference images for encoder training: every `stride`-th grid pose, at most
/// `max_images` of them.
std::vector<Image> render_training_set(const MapRaster& map, std::span<const GridPose> grid_poses,
                                       const CameraSpec& cam, const LightingSpec& light,
                                       std::size_t max_images, unsigned threads = 1);

std::size_t codebook_fixed_bytes(const std::string& encoder_id);
std::size_t codebook_file_bytes(const Codebook& cb);

std::vector<std::uint8_t> serialize_codebook(const Codebook& cb);
Codebook parse_codebook(std::span<const std::uint8_t> bytes);
void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

/// Arc-length projection of a prior onto the codebook's centerline.
Projection project_prior(const Codebook& cb, const PlanarPose& prior);

/// Column indices (ascending) whose arc length lies in
/// [s0 - half_window, s0 + half_window), all lateral offsets included, where
/// s0 is the prior's projection. Throws OutOfBounds if the window is empty or
/// the prior is further than lateral_extent + half_window from the path.
std::vector<std::size_t> select_window(const Codebook& cb, const PlanarPose& prior, double half_window);

}  // namespace satloc
