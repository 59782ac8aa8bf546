#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace satloc {

/// Base for every error raised by the library. Subclasses let callers (and the
/// CLI exit-code mapping) tell bad input apart from corrupt files.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad dimensions, bad scale...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A serialized artifact failed validation (magic, version, size, checksum).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A camera footprint or window fell outside the mapped area.
class OutOfBounds : public Error {
public:
    using Error::Error;
};

/// Wrap an angle in degrees to (-180, 180].
double normalize_degrees(double deg);

/// Signed shortest difference a - b in degrees, wrapped to (-180, 180].
inline double angle_diff_degrees(double a, double b) { return normalize_degrees(a - b); }

constexpr double kPi = 3.14159265358979323846;
inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

/// Planar pose in the map frame. x is the "longitude" axis, y the "latitude"
/// axis, heading is CCW from +y in degrees.
struct PlanarPose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;

    PlanarPose() = default;
    PlanarPose(double x_, double y_, double heading_)
        : x(x_), y(y_), heading(normalize_degrees(heading_)) {}

    bool operator==(const PlanarPose&) const = default;
};

/// Unit vector the camera "forward" axis points along at a heading.
struct Direction2 {
    double x;
    double y;
};
inline Direction2 forward_of(double heading_deg)
{
    const double h = deg2rad(heading_deg);
    return {-std::sin(h), std::cos(h)};
}
inline Direction2 right_of(double heading_deg)
{
    const double h = deg2rad(heading_deg);
    return {std::cos(h), std::sin(h)};
}

}  // namespace satloc
