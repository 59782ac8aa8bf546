#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace satloc {

/// Nadir camera output size; the encoder input is fixed to this.
inline constexpr int kCameraWidth = 320;
inline constexpr int kCameraHeight = 160;
inline constexpr std::size_t kCameraPixels = std::size_t{kCameraWidth} * kCameraHeight;

/// Row-major grayscale image, intensities nominally in [0, 1]. Row 0 is the
/// top of the image (the camera's forward edge).
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int w, int h, float fill = 0.0f);

    float at(int col, int row) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
    float& at(int col, int row) { return pixels[static_cast<std::size_t>(row) * width + col]; }

    std::span<const float> flat() const { return pixels; }
    std::size_t size() const { return pixels.size(); }
    double mean() const;

    bool operator==(const Image&) const = default;
};

/// Mean absolute difference over the centred crop covering `fraction` of each
/// dimension (fraction = 1 uses the whole image).
double mean_abs_diff(const Image& a, const Image& b, double fraction = 1.0);

}  // namespace satloc
