#pragma once
// 8-bit grayscale PNG files with JSON sidecars.
//
// A map stored at base path "dir/map" consists of
//   dir/map.png      intensities
//   dir/map.occ.png  occluder mask (0 / 255)
//   dir/map.json     {"width_px", "height_px", "meters_per_pixel", "origin_x",
//                     "origin_y", "seed", "occluders"}

#include <filesystem>

#include "satloc/image.hpp"
#include "satloc/map_synth.hpp"

namespace satloc {

/// Intensities are clamped to [0,1] and rounded to the nearest 1/255.
void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);

void save_map(const MapRaster& map, const std::filesystem::path& base);
MapRaster load_map(const std::filesystem::path& base);

/// Rendered view plus a sidecar recording the pose and lighting it came from.
void save_view(const std::filesystem::path& png_path, const Image& img, const PlanarPose& pose,
               const CameraSpec& cam, const LightingSpec& light);

}  // namespace satloc
