#include "satloc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace satloc {
namespace {

double arc_epsilon(double length) { return 1e-9 * std::max(1.0, length); }

}  // namespace

void PathSpec::validate() const
{
    if (waypoints.size() < 2) throw InvalidArgument("path: need at least 2 waypoints");
    for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
        const Point2& a = waypoints[i];
        const Point2& b = waypoints[i + 1];
        if (!std::isfinite(a.x) || !std::isfinite(a.y) || !std::isfinite(b.x) || !std::isfinite(b.y)) {
            throw InvalidArgument("path: non-finite waypoint");
        }
        if (a == b) throw InvalidArgument("path: consecutive waypoints " + std::to_string(i) + " and " +
                                          std::to_string(i + 1) + " coincide");
    }
    if (!segment_headings.empty() && segment_headings.size() != waypoints.size() - 1) {
        throw InvalidArgument("path: segment_headings must have one entry per segment");
    }
}

double PathSpec::length() const
{
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
        total += std::hypot(waypoints[i + 1].x - waypoints[i].x, waypoints[i + 1].y - waypoints[i].y);
    }
    return total;
}

double PathSpec::travel_heading(std::size_t seg) const
{
    const double dx = waypoints[seg + 1].x - waypoints[seg].x;
    const double dy = waypoints[seg + 1].y - waypoints[seg].y;
    return normalize_degrees(rad2deg(std::atan2(-dx, dy)));
}

double PathSpec::segment_heading(std::size_t seg) const
{
    return segment_headings.empty() ? travel_heading(seg) : normalize_degrees(segment_headings[seg]);
}

std::size_t PathSpec::segment_at(double s) const
{
    double start = 0.0;
    const std::size_t last = segment_count() - 1;
    for (std::size_t seg = 0; seg < last; ++seg) {
        const double len = std::hypot(waypoints[seg + 1].x - waypoints[seg].x, waypoints[seg + 1].y - waypoints[seg].y);
        if (s < start + len) return seg;
        start += len;
    }
    return last;
}

PlanarPose PathSpec::pose_at(double s, double lateral) const
{
    validate();
    s = std::clamp(s, 0.0, length());
    double start = 0.0;
    const std::size_t seg = segment_at(s);
    for (std::size_t i = 0; i < seg; ++i) {
        start += std::hypot(waypoints[i + 1].x - waypoints[i].x, waypoints[i + 1].y - waypoints[i].y);
    }
    const Point2& a = waypoints[seg];
    const Point2& b = waypoints[seg + 1];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double ux = (b.x - a.x) / len;
    const double uy = (b.y - a.y) / len;
    const double along = s - start;
    // Right of travel is (uy, -ux).
    return PlanarPose(a.x + along * ux + lateral * uy, a.y + along * uy - lateral * ux, segment_heading(seg));
}

PathSpec PathSpec::straight(Point2 start, double heading_deg, double length)
{
    const Direction2 f = forward_of(heading_deg);
    PathSpec p;
    p.waypoints = {start, {start.x + length * f.x, start.y + length * f.y}};
    return p;
}

void GridSpec::validate() const
{
    if (!(along_spacing > 0.0) || !(lateral_spacing > 0.0)) {
        throw InvalidArgument("grid: spacings must be positive");
    }
    if (!(lateral_extent >= 0.0)) throw InvalidArgument("grid: lateral_extent must be >= 0");
    const double ratio = lateral_extent / lateral_spacing;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
        throw InvalidArgument("grid: lateral_extent must be an integer multiple of lateral_spacing");
    }
}

int GridSpec::lateral_count() const
{
    return 2 * static_cast<int>(std::llround(lateral_extent / lateral_spacing)) + 1;
}

std::size_t station_count(const PathSpec& path, const GridSpec& grid)
{
    path.validate();
    grid.validate();
    const double length = path.length();
    const double limit = length - arc_epsilon(length);
    std::size_t k = 0;
    while (static_cast<double>(k) * grid.along_spacing < limit) ++k;
    return std::max<std::size_t>(k, 1);
}

std::vector<GridPose> enumerate_grid(const PathSpec& path, const GridSpec& grid)
{
    const std::size_t stations = station_count(path, grid);
    const int half = grid.half_lateral_count();
    std::vector<GridPose> out;
    out.reserve(stations * static_cast<std::size_t>(grid.lateral_count()));
    for (std::size_t k = 0; k < stations; ++k) {
        const double s = static_cast<double>(k) * grid.along_spacing;
        for (int j = -half; j <= half; ++j) {
            const double lateral = j * grid.lateral_spacing;
            out.push_back({path.pose_at(s, lateral), s, lateral});
        }
    }
    return out;
}

Projection project_onto_polyline(std::span<const Point2> vertices, std::span<const double> arcs, Point2 p)
{
    if (vertices.empty() || vertices.size() != arcs.size()) {
        throw InvalidArgument("project_onto_polyline: need matching, non-empty vertices and arcs");
    }
    Projection best{arcs[0], std::hypot(p.x - vertices[0].x, p.y - vertices[0].y)};
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
        const Point2& a = vertices[i];
        const Point2& b = vertices[i + 1];
        const double dx = b.x - a.x, dy = b.y - a.y;
        const double len2 = dx * dx + dy * dy;
        double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double d = std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
        if (d < best.distance) best = {arcs[i] + t * (arcs[i + 1] - arcs[i]), d};
    }
    return best;
}

}  // namespace satloc
