#include "satloc/common.hpp"

#include <cmath>

namespace satloc {

double normalize_degrees(double deg)
{
    if (!std::isfinite(deg)) return deg;
    double r = std::fmod(deg, 360.0);
    if (r <= -180.0) r += 360.0;
    else if (r > 180.0) r -= 360.0;
    return r;
}

}  // namespace satloc
