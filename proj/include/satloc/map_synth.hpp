#pragma once
// Procedural orthophoto maps and nadir camera rendering.
//
// Map frame: x east ("longitude" axis), y north ("latitude" axis), meters.
// Raster pixel (col, row) has its centre at
//   x = origin_x + (col + 0.5) * mpp,  y = origin_y + (height - row - 0.5) * mpp,
// so row 0 is the northern edge.

#include <cstdint>
#include <memory>
#include <vector>

#include "satloc/common.hpp"
#include "satloc/image.hpp"

namespace satloc {

/// Object densities are per hectare so the same scene parameters give a
/// comparable look on any raster size. All zero means a uniform background.
struct SceneParams {
    double background = 0.45;
    double texture_amplitude = 0.06;   ///< fine ground texture, +-amplitude
    double texture_cell = 1.5;         ///< meters per value-noise cell

    double patch_density = 1.0;        ///< large ground patches (fields, dirt)
    double patch_radius_min = 8.0;
    double patch_radius_max = 25.0;

    double road_density = 0.12;        ///< polylines per hectare
    double road_width_min = 5.0;
    double road_width_max = 9.0;

    double building_density = 8.0;
    double building_size_min = 6.0;
    double building_size_max = 22.0;

    double tree_density = 30.0;
    double tree_radius_min = 1.5;
    double tree_radius_max = 4.0;

    bool empty() const
    {
        return texture_amplitude == 0.0 && patch_density == 0.0 && road_density == 0.0 &&
               building_density == 0.0 && tree_density == 0.0;
    }
};

struct MapSpec {
    int width_px = 2048;
    int height_px = 2048;
    double meters_per_pixel = 0.25;
    double origin_x = 0.0;
    double origin_y = 0.0;
    SceneParams scene;
};

struct MapRaster {
    int width_px = 0;
    int height_px = 0;
    double meters_per_pixel = 0.0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    std::uint64_t seed = 0;
    /// Row-major intensities in [0,1], quantized to multiples of 1/255 so the
    /// 8-bit PNG round trip is lossless.
    std::vector<float> pixels;
    /// 1 where a shadow-casting object (building, tree) covers the pixel.
    std::vector<std::uint8_t> occluders;

    float at(int col, int row) const { return pixels[static_cast<std::size_t>(row) * width_px + col]; }
    bool occluded(int col, int row) const
    {
        return occluders[static_cast<std::size_t>(row) * width_px + col] != 0;
    }
    double width_m() const { return width_px * meters_per_pixel; }
    double height_m() const { return height_px * meters_per_pixel; }

    /// Continuous pixel coordinates (pixel centres at integers).
    double col_of(double x) const { return (x - origin_x) / meters_per_pixel - 0.5; }
    double row_of(double y) const { return height_px - 0.5 - (y - origin_y) / meters_per_pixel; }
    double x_of(double col) const { return origin_x + (col + 0.5) * meters_per_pixel; }
    double y_of(double row) const { return origin_y + (height_px - row - 0.5) * meters_per_pixel; }

    bool operator==(const MapRaster&) const = default;
};

/// Sun direction is CCW from +y like headings; shadows fall on the far side.
inline constexpr double kReferenceSunAzimuth = 135.0;

struct LightingSpec {
    double sun_azimuth = kReferenceSunAzimuth;
    double shadow_length = 0.0;   ///< meters
    double brightness_gain = 1.0;
    double gamma = 1.0;
    double noise_sigma = 0.0;
    std::uint64_t noise_seed = 0;

    void validate() const;
};

struct CameraSpec {
    static constexpr int out_width_px = kCameraWidth;
    static constexpr int out_height_px = kCameraHeight;
    /// Ground footprint in meters. Rotation in image space assumes square
    /// output pixels, i.e. footprint_width / 320 == footprint_height / 160.
    double footprint_width = 80.0;
    double footprint_height = 40.0;

    void validate() const;
};

MapRaster generate_map(const MapSpec& spec, std::uint64_t seed);

/// Per-pixel shadow flags for a whole raster under one sun direction/length.
/// Renderers that reuse a lighting condition precompute this once.
class ShadowLayer {
public:
    ShadowLayer() = default;
    ShadowLayer(const MapRaster& map, double sun_azimuth, double shadow_length);

    bool empty() const { return flags_.empty(); }
    bool shadowed(int col, int row) const { return flags_[static_cast<std::size_t>(row) * width_ + col] != 0; }
    double sun_azimuth() const { return azimuth_; }
    double shadow_length() const { return length_; }

private:
    int width_ = 0;
    double azimuth_ = 0.0;
    double length_ = 0.0;
    std::vector<std::uint8_t> flags_;
};

/// Fixed shading factor applied inside cast shadows.
inline constexpr float kShadowFactor = 0.5f;

/// Orthographic nadir view centred on pose, rotated by its heading, resampled
/// bilinearly to 320x160, then shadowed, gamma-corrected, gained, noised and
/// clamped to [0,1]. Throws OutOfBounds when any sample falls off the raster.
Image render_view(const MapRaster& map, const PlanarPose& pose, const CameraSpec& cam,
                  const LightingSpec& light);

/// Same result as render_view, reusing a precomputed shadow layer; the layer
/// must match light.sun_azimuth / light.shadow_length.
Image render_view(const MapRaster& map, const ShadowLayer& shadows, const PlanarPose& pose,
                  const CameraSpec& cam, const LightingSpec& light);

/// True when every sample of the footprint lies on the raster.
bool footprint_inside(const MapRaster& map, const PlanarPose& pose, const CameraSpec& cam);

/// Rotate about the image centre by delta degrees (|delta| <= 45) with
/// bilinear resampling; out-of-frame pixels take the image mean. Rotating a
/// view rendered at heading h by d approximates the view at heading h - d.
Image rotate_image(const Image& img, double delta_deg);

}  // namespace satloc
