#pragma once
// Fixtures shared by the unit tests.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "satloc/codebook.hpp"
#include "satloc/encoder.hpp"
#include "satloc/grid.hpp"
#include "satloc/map_synth.hpp"

namespace satloc::test {

/// 160 m square map at 0.25 m/px.
inline MapRaster small_map(std::uint64_t seed = 11)
{
    MapSpec spec;
    spec.width_px = 640;
    spec.height_px = 640;
    spec.meters_per_pixel = 0.25;
    return generate_map(spec, seed);
}

/// Codebook with random embeddings over the default grid of `path`; no
/// rendering involved.
inline Codebook random_codebook(const PathSpec& path, int dim, std::uint64_t seed, GridSpec grid = {})
{
    Codebook cb;
    cb.grid = grid;
    cb.encoder_id = "random/D=" + std::to_string(dim);
    for (const GridPose& g : enumerate_grid(path, grid)) {
        cb.poses.push_back(g.pose);
        cb.arc_length.push_back(g.arc_length);
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    cb.embeddings.resize(dim, static_cast<Eigen::Index>(cb.poses.size()));
    for (Eigen::Index i = 0; i < cb.embeddings.size(); ++i) cb.embeddings.data()[i] = n(rng);
    return cb;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("satloc_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace satloc::test
