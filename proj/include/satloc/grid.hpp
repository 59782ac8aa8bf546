#pragma once
// Reference grid around a planned path.

#include <cstddef>
#include <span>
#include <vector>

#include "satloc/common.hpp"

namespace satloc {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point2&) const = default;
};

struct PathSpec {
    std::vector<Point2> waypoints;
    /// Optional camera heading per segment (degrees). Empty means the
    /// direction of travel along each segment.
    std::vector<double> segment_headings;

    void validate() const;
    double length() const;
    std::size_t segment_count() const { return waypoints.size() - 1; }
    double segment_heading(std::size_t seg) const;
    /// Heading of travel along a segment, independent of segment_headings.
    double travel_heading(std::size_t seg) const;

    /// Segment containing arc length s; a vertex belongs to the segment it
    /// starts. s is clamped to [0, length].
    std::size_t segment_at(double s) const;

    /// Pose at arc length s shifted `lateral` meters to the right of travel.
    PlanarPose pose_at(double s, double lateral = 0.0) const;

    static PathSpec straight(Point2 start, double heading_deg, double length);
};

struct GridSpec {
    double along_spacing = 0.5;
    double lateral_extent = 5.0;
    double lateral_spacing = 0.5;

    void validate() const;
    /// Number of lateral offsets per along-track station (21 by default).
    int lateral_count() const;
    int half_lateral_count() const { return (lateral_count() - 1) / 2; }
    bool operator==(const GridSpec&) const = default;
};

struct GridPose {
    PlanarPose pose;
    double arc_length = 0.0;
    double lateral = 0.0;
};

/// Stations at s = k * along_spacing for all s < path length; at each, the
/// offsets -extent, ..., 0, ..., +extent perpendicular to the local segment.
/// Ordered along-track-major, lateral-minor (left to right).
std::vector<GridPose> enumerate_grid(const PathSpec& path, const GridSpec& grid);

/// Number of along-track stations enumerate_grid() produces.
std::size_t station_count(const PathSpec& path, const GridSpec& grid);

/// Nearest point on a polyline given by vertices and their arc lengths.
/// Ties go to the smaller arc length.
struct Projection {
    double arc_length;
    double distance;
};
Projection project_onto_polyline(std::span<const Point2> vertices, std::span<const double> arcs, Point2 p);

}  // namespace satloc
