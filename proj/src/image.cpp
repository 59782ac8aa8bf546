#include "satloc/image.hpp"

#include <cmath>
#include <numeric>

#include "satloc/common.hpp"

namespace satloc {

Image::Image(int w, int h, float fill) : width(w), height(h)
{
    if (w <= 0 || h <= 0) throw InvalidArgument("Image: non-positive dimensions");
    pixels.assign(static_cast<std::size_t>(w) * h, fill);
}

double Image::mean() const
{
    if (pixels.empty()) return 0.0;
    double sum = 0.0;
    for (float v : pixels) sum += v;
    return sum / static_cast<double>(pixels.size());
}

double mean_abs_diff(const Image& a, const Image& b, double fraction)
{
    if (a.width != b.width || a.height != b.height) {
        throw InvalidArgument("mean_abs_diff: image dimensions differ");
    }
    const int mx = static_cast<int>(std::lround(a.width * (1.0 - fraction) / 2.0));
    const int my = static_cast<int>(std::lround(a.height * (1.0 - fraction) / 2.0));
    double sum = 0.0;
    std::size_t n = 0;
    for (int r = my; r < a.height - my; ++r) {
        for (int c = mx; c < a.width - mx; ++c) {
            sum += std::abs(static_cast<double>(a.at(c, r)) - b.at(c, r));
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace satloc
