#include "satloc/map_synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

namespace satloc {
namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Deterministic lattice value in [-1, 1].
double lattice_value(std::uint64_t seed, std::int64_t i, std::int64_t j)
{
    std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i) * 0x632BE59BD9B4E019ull +
                                                   static_cast<std::uint64_t>(j)));
    return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

double smoothstep(double e0, double e1, double x)
{
    const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

class Canvas {
public:
    Canvas(const MapRaster& geom, double background)
        : g_(geom), v_(static_cast<std::size_t>(geom.width_px) * geom.height_px, background),
          occ_(v_.size(), 0)
    {
    }

    struct PixelBox {
        int c0, c1, r0, r1;
    };

    /// Pixel range covering a world-space axis-aligned box, clipped.
    PixelBox box(double xmin, double xmax, double ymin, double ymax) const
    {
        PixelBox b;
        b.c0 = std::max(0, static_cast<int>(std::floor(g_.col_of(xmin))));
        b.c1 = std::min(g_.width_px - 1, static_cast<int>(std::ceil(g_.col_of(xmax))));
        b.r0 = std::max(0, static_cast<int>(std::floor(g_.row_of(ymax))));
        b.r1 = std::min(g_.height_px - 1, static_cast<int>(std::ceil(g_.row_of(ymin))));
        return b;
    }

    void blend(int c, int r, double value, double alpha)
    {
        double& v = v_[index(c, r)];
        v = v * (1.0 - alpha) + value * alpha;
    }
    void add(int c, int r, double delta) { v_[index(c, r)] += delta; }
    void mark_occluder(int c, int r) { occ_[index(c, r)] = 1; }
    void clear_occluder(int c, int r) { occ_[index(c, r)] = 0; }

    const MapRaster& geom() const { return g_; }

    void finish(MapRaster& out) const
    {
        out.pixels.resize(v_.size());
        for (std::size_t i = 0; i < v_.size(); ++i) {
            const double q = std::round(std::clamp(v_[i], 0.0, 1.0) * 255.0);
            out.pixels[i] = static_cast<float>(q / 255.0);
        }
        out.occluders = occ_;
    }

private:
    std::size_t index(int c, int r) const { return static_cast<std::size_t>(r) * g_.width_px + c; }

    const MapRaster& g_;
    std::vector<double> v_;
    std::vector<std::uint8_t> occ_;
};

/// Irregular soft-edged blob: radius modulated by two low harmonics.
struct Blob {
    double cx, cy, radius, intensity;
    std::array<double, 4> harmonics;  // amp2, phase2, amp3, phase3

    double radius_at(double theta) const
    {
        return radius * (1.0 + harmonics[0] * std::sin(2.0 * theta + harmonics[1]) +
                         harmonics[2] * std::sin(3.0 * theta + harmonics[3]));
    }
};

template <class Rng>
Blob random_blob(Rng& rng, const MapRaster& g, double rmin, double rmax, double imin, double imax)
{
    std::uniform_real_distribution<double> ux(g.origin_x, g.origin_x + g.width_m());
    std::uniform_real_distribution<double> uy(g.origin_y, g.origin_y + g.height_m());
    std::uniform_real_distribution<double> ur(rmin, rmax);
    std::uniform_real_distribution<double> ui(imin, imax);
    std::uniform_real_distribution<double> ua(0.0, 0.18);
    std::uniform_real_distribution<double> up(0.0, 2.0 * kPi);
    Blob b{ux(rng), uy(rng), ur(rng), ui(rng), {}};
    b.harmonics = {ua(rng), up(rng), ua(rng), up(rng)};
    return b;
}

/// Paint a blob; `edge` is the soft transition width in meters. Returns
/// nothing, marks occluders where coverage exceeds one half if requested.
void paint_blob(Canvas& cv, const Blob& b, double edge, bool occludes, bool additive)
{
    const MapRaster& g = cv.geom();
    const double reach = b.radius * 1.4 + edge;
    const auto box = cv.box(b.cx - reach, b.cx + reach, b.cy - reach, b.cy + reach);
    for (int r = box.r0; r <= box.r1; ++r) {
        const double y = g.y_of(r) - b.cy;
        for (int c = box.c0; c <= box.c1; ++c) {
            const double x = g.x_of(c) - b.cx;
            const double d = std::hypot(x, y);
            const double rr = b.radius_at(std::atan2(y, x));
            const double alpha = 1.0 - smoothstep(rr - edge, rr, d);
            if (alpha <= 0.0) continue;
            if (additive) {
                cv.add(c, r, b.intensity * alpha);
            } else {
                cv.blend(c, r, b.intensity, alpha);
            }
            if (occludes && alpha > 0.5) cv.mark_occluder(c, r);
        }
    }
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by)
{
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
}

template <class Rng>
void paint_road(Canvas& cv, Rng& rng, const SceneParams& p)
{
    const MapRaster& g = cv.geom();
    std::uniform_real_distribution<double> ux(g.origin_x, g.origin_x + g.width_m());
    std::uniform_real_distribution<double> uy(g.origin_y, g.origin_y + g.height_m());
    std::uniform_real_distribution<double> uw(p.road_width_min, p.road_width_max);
    std::uniform_real_distribution<double> ui(0.24, 0.32);
    std::uniform_real_distribution<double> uh(0.0, 2.0 * kPi);
    std::uniform_real_distribution<double> ulen(40.0, 140.0);
    std::uniform_real_distribution<double> uturn(-deg2rad(45.0), deg2rad(45.0));
    std::uniform_int_distribution<int> nseg(2, 5);

    std::vector<std::array<double, 2>> pts;
    pts.push_back({ux(rng), uy(rng)});
    double dir = uh(rng);
    const int n = nseg(rng);
    for (int i = 0; i < n; ++i) {
        const double len = ulen(rng);
        pts.push_back({pts.back()[0] + len * std::cos(dir), pts.back()[1] + len * std::sin(dir)});
        dir += uturn(rng);
    }
    const double half_width = uw(rng) / 2.0;
    const double intensity = ui(rng);
    const double edge = 0.5;

    for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
        const auto& a = pts[s];
        const auto& b = pts[s + 1];
        const double reach = half_width + edge;
        const auto box = cv.box(std::min(a[0], b[0]) - reach, std::max(a[0], b[0]) + reach,
                                std::min(a[1], b[1]) - reach, std::max(a[1], b[1]) + reach);
        for (int r = box.r0; r <= box.r1; ++r) {
            const double y = g.y_of(r);
            for (int c = box.c0; c <= box.c1; ++c) {
                const double d = segment_distance(g.x_of(c), y, a[0], a[1], b[0], b[1]);
                const double alpha = 1.0 - smoothstep(half_width - edge, half_width, d);
                if (alpha <= 0.0) continue;
                cv.blend(c, r, intensity, alpha);
                // Roads cut through vegetation and cast no shadow themselves.
                cv.clear_occluder(c, r);
            }
        }
    }
}

template <class Rng>
void paint_building(Canvas& cv, Rng& rng, const SceneParams& p)
{
    const MapRaster& g = cv.geom();
    std::uniform_real_distribution<double> ux(g.origin_x, g.origin_x + g.width_m());
    std::uniform_real_distribution<double> uy(g.origin_y, g.origin_y + g.height_m());
    std::uniform_real_distribution<double> us(p.building_size_min, p.building_size_max);
    std::uniform_real_distribution<double> ui(0.62, 0.92);
    std::uniform_real_distribution<double> ua(0.0, kPi);

    const double cx = ux(rng), cy = uy(rng);
    const double half_l = us(rng) / 2.0, half_w = us(rng) / 2.0;
    const double angle = ua(rng);
    const double roof = ui(rng);
    const double ridge_shade = 0.82;
    const double ca = std::cos(angle), sa = std::sin(angle);
    const double reach = std::hypot(half_l, half_w) + 1.0;
    const auto box = cv.box(cx - reach, cx + reach, cy - reach, cy + reach);
    for (int r = box.r0; r <= box.r1; ++r) {
        const double y = g.y_of(r) - cy;
        for (int c = box.c0; c <= box.c1; ++c) {
            const double x = g.x_of(c) - cx;
            const double u = x * ca + y * sa;
            const double v = -x * sa + y * ca;
            if (std::abs(u) > half_l || std::abs(v) > half_w) continue;
            // Pitched roof: the two halves either side of the ridge differ.
            const double value = (half_l >= half_w ? v : u) < 0.0 ? roof * ridge_shade : roof;
            cv.blend(c, r, value, 1.0);
            cv.mark_occluder(c, r);
        }
    }
}

std::size_t count_for(double density_per_ha, const MapRaster& g)
{
    const double hectares = g.width_m() * g.height_m() / 10000.0;
    return static_cast<std::size_t>(std::llround(density_per_ha * hectares));
}

/// Shadow test shared by the cached and uncached render paths so both give
/// identical results.
struct ShadowWalk {
    double step_col;
    double step_row;
    int steps;

    ShadowWalk(const MapRaster& map, double azimuth, double length)
    {
        const double a = deg2rad(azimuth);
        // Toward the sun in raster coordinates (rows grow southward).
        step_col = -std::sin(a);
        step_row = -std::cos(a);
        steps = length > 0.0 ? static_cast<int>(std::ceil(length / map.meters_per_pixel)) : 0;
    }

    bool shadowed(const MapRaster& map, int c, int r) const
    {
        if (steps == 0 || map.occluded(c, r)) return false;
        for (int k = 1; k <= steps; ++k) {
            const int cc = c + static_cast<int>(std::lround(k * step_col));
            const int rr = r + static_cast<int>(std::lround(k * step_row));
            if (cc < 0 || rr < 0 || cc >= map.width_px || rr >= map.height_px) return false;
            if (map.occluded(cc, rr)) return true;
        }
        return false;
    }
};

struct SampleGrid {
    double x0, y0;           // world position of output pixel (0, 0)
    double du_x, du_y;       // world step per output column
    double dv_x, dv_y;       // world step per output row
};

SampleGrid sample_grid(const PlanarPose& pose, const CameraSpec& cam)
{
    const double heading = normalize_degrees(pose.heading);
    const Direction2 right = right_of(heading);
    const Direction2 fwd = forward_of(heading);
    const double su = cam.footprint_width / CameraSpec::out_width_px;
    const double sv = cam.footprint_height / CameraSpec::out_height_px;
    const double a0 = (0.5 - CameraSpec::out_width_px / 2.0) * su;
    const double b0 = (CameraSpec::out_height_px / 2.0 - 0.5) * sv;
    SampleGrid g;
    g.x0 = pose.x + a0 * right.x + b0 * fwd.x;
    g.y0 = pose.y + a0 * right.y + b0 * fwd.y;
    g.du_x = su * right.x;
    g.du_y = su * right.y;
    g.dv_x = -sv * fwd.x;
    g.dv_y = -sv * fwd.y;
    return g;
}

void check_inside(const MapRaster& map, const PlanarPose& pose, const CameraSpec& cam)
{
    if (!footprint_inside(map, pose, cam)) {
        throw OutOfBounds("camera footprint at (" + std::to_string(pose.x) + ", " +
                          std::to_string(pose.y) + ", " + std::to_string(pose.heading) +
                          ") leaves the map raster");
    }
}

template <class ShadeFn>
Image render_impl(const MapRaster& map, const PlanarPose& pose, const CameraSpec& cam,
                  const LightingSpec& light, ShadeFn&& shaded)
{
    cam.validate();
    light.validate();
    check_inside(map, pose, cam);
    const SampleGrid sg = sample_grid(pose, cam);
    Image out(CameraSpec::out_width_px, CameraSpec::out_height_px);
    const bool use_shadow = light.shadow_length > 0.0;

    auto value = [&](int c, int r) -> float {
        const float v = map.at(c, r);
        return use_shadow && shaded(c, r) ? v * kShadowFactor : v;
    };

    std::mt19937_64 noise_rng(light.noise_seed);
    std::normal_distribution<double> noise(0.0, light.noise_sigma > 0.0 ? light.noise_sigma : 1.0);

    for (int v = 0; v < out.height; ++v) {
        for (int u = 0; u < out.width; ++u) {
            const double x = sg.x0 + u * sg.du_x + v * sg.dv_x;
            const double y = sg.y0 + u * sg.du_y + v * sg.dv_y;
            const double col = std::clamp(map.col_of(x), 0.0, map.width_px - 1.0);
            const double row = std::clamp(map.row_of(y), 0.0, map.height_px - 1.0);
            const int c0 = static_cast<int>(col);
            const int r0 = static_cast<int>(row);
            const int c1 = std::min(c0 + 1, map.width_px - 1);
            const int r1 = std::min(r0 + 1, map.height_px - 1);
            const double fx = col - c0;
            const double fy = row - r0;
            double s;
            if (fx == 0.0 && fy == 0.0) {
                s = value(c0, r0);
            } else {
                s = (1.0 - fy) * ((1.0 - fx) * value(c0, r0) + fx * value(c1, r0)) +
                    fy * ((1.0 - fx) * value(c0, r1) + fx * value(c1, r1));
            }
            if (light.gamma != 1.0) s = std::pow(std::clamp(s, 0.0, 1.0), light.gamma);
            if (light.brightness_gain != 1.0) s *= light.brightness_gain;
            if (light.noise_sigma > 0.0) s += noise(noise_rng);
            out.at(u, v) = static_cast<float>(std::clamp(s, 0.0, 1.0));
        }
    }
    return out;
}

}  // namespace

void LightingSpec::validate() const
{
    if (!(shadow_length >= 0.0) || !(brightness_gain > 0.0) || !(gamma > 0.0) ||
        !(noise_sigma >= 0.0) || !std::isfinite(sun_azimuth)) {
        throw InvalidArgument("LightingSpec: shadow_length/noise_sigma must be >= 0, gain/gamma > 0");
    }
}

void CameraSpec::validate() const
{
    if (!(footprint_width > 0.0) || !(footprint_height > 0.0)) {
        throw InvalidArgument("CameraSpec: footprint must be positive");
    }
}

MapRaster generate_map(const MapSpec& spec, std::uint64_t seed)
{
    if (spec.width_px <= 0 || spec.height_px <= 0) {
        throw InvalidArgument("generate_map: raster dimensions must be positive");
    }
    if (!(spec.meters_per_pixel > 0.0) || !std::isfinite(spec.meters_per_pixel)) {
        throw InvalidArgument("generate_map: meters_per_pixel must be positive");
    }
    const SceneParams& p = spec.scene;

    MapRaster map;
    map.width_px = spec.width_px;
    map.height_px = spec.height_px;
    map.meters_per_pixel = spec.meters_per_pixel;
    map.origin_x = spec.origin_x;
    map.origin_y = spec.origin_y;
    map.seed = seed;

    Canvas cv(map, p.background);
    std::mt19937_64 rng(seed);

    if (p.texture_amplitude > 0.0) {
        const std::uint64_t tex_seed = splitmix64(seed ^ 0x7E57u);
        const double cell = p.texture_cell;
        for (int r = 0; r < map.height_px; ++r) {
            const double gy = (map.y_of(r) - map.origin_y) / cell;
            const auto j = static_cast<std::int64_t>(std::floor(gy));
            const double ty = smoothstep(0.0, 1.0, gy - j);
            for (int c = 0; c < map.width_px; ++c) {
                const double gx = (map.x_of(c) - map.origin_x) / cell;
                const auto i = static_cast<std::int64_t>(std::floor(gx));
                const double tx = smoothstep(0.0, 1.0, gx - i);
                const double v0 = lattice_value(tex_seed, i, j) * (1 - tx) + lattice_value(tex_seed, i + 1, j) * tx;
                const double v1 = lattice_value(tex_seed, i, j + 1) * (1 - tx) + lattice_value(tex_seed, i + 1, j + 1) * tx;
                cv.add(c, r, p.texture_amplitude * (v0 * (1 - ty) + v1 * ty));
            }
        }
    }

    for (std::size_t k = 0, n = count_for(p.patch_density, map); k < n; ++k) {
        const Blob b = random_blob(rng, map, p.patch_radius_min, p.patch_radius_max, -0.14, 0.14);
        paint_blob(cv, b, 0.3 * b.radius, false, true);
    }
    for (std::size_t k = 0, n = count_for(p.road_density, map); k < n; ++k) paint_road(cv, rng, p);
    for (std::size_t k = 0, n = count_for(p.building_density, map); k < n; ++k) paint_building(cv, rng, p);
    for (std::size_t k = 0, n = count_for(p.tree_density, map); k < n; ++k) {
        const Blob b = random_blob(rng, map, p.tree_radius_min, p.tree_radius_max, 0.10, 0.22);
        paint_blob(cv, b, 0.6, true, false);
    }

    cv.finish(map);
    return map;
}

ShadowLayer::ShadowLayer(const MapRaster& map, double sun_azimuth, double shadow_length)
    : width_(map.width_px), azimuth_(sun_azimuth), length_(shadow_length),
      flags_(static_cast<std::size_t>(map.width_px) * map.height_px, 0)
{
    const ShadowWalk walk(map, sun_azimuth, shadow_length);
    for (int r = 0; r < map.height_px; ++r) {
        for (int c = 0; c < map.width_px; ++c) {
            flags_[static_cast<std::size_t>(r) * width_ + c] = walk.shadowed(map, c, r) ? 1 : 0;
        }
    }
}

bool footprint_inside(const MapRaster& map, const PlanarPose& pose, const CameraSpec& cam)
{
    const SampleGrid sg = sample_grid(pose, cam);
    const int umax = CameraSpec::out_width_px - 1;
    const int vmax = CameraSpec::out_height_px - 1;
    constexpr double eps = 1e-9;
    for (auto [u, v] : {std::array<int, 2>{0, 0}, {umax, 0}, {0, vmax}, {umax, vmax}}) {
        const double col = map.col_of(sg.x0 + u * sg.du_x + v * sg.dv_x);
        const double row = map.row_of(sg.y0 + u * sg.du_y + v * sg.dv_y);
        if (col < -eps || row < -eps || col > map.width_px - 1 + eps || row > map.height_px - 1 + eps) {
            return false;
        }
    }
    return true;
}

Image render_view(const MapRaster& map, const PlanarPose& pose, const CameraSpec& cam,
                  const LightingSpec& light)
{
    const ShadowWalk walk(map, light.sun_azimuth, light.shadow_length);
    return render_impl(map, pose, cam, light, [&](int c, int r) { return walk.shadowed(map, c, r); });
}

Image render_view(const MapRaster& map, const ShadowLayer& shadows, const PlanarPose& pose,
                  const CameraSpec& cam, const LightingSpec& light)
{
    if (light.shadow_length > 0.0 &&
        (shadows.empty() || shadows.sun_azimuth() != light.sun_azimuth ||
         shadows.shadow_length() != light.shadow_length)) {
        throw InvalidArgument("render_view: shadow layer does not match the lighting spec");
    }
    return render_impl(map, pose, cam, light, [&](int c, int r) { return shadows.shadowed(c, r); });
}

Image rotate_image(const Image& img, double delta_deg)
{
    if (!(std::abs(delta_deg) <= 45.0)) throw InvalidArgument("rotate_image: |delta| must be <= 45 degrees");
    if (delta_deg == 0.0) return img;

    const auto fill = static_cast<float>(img.mean());
    const double d = deg2rad(delta_deg);
    const double cd = std::cos(d), sd = std::sin(d);
    const double cx = (img.width - 1) / 2.0;
    const double cy = (img.height - 1) / 2.0;
    const double max_c = img.width - 1.0, max_r = img.height - 1.0;

    Image out(img.width, img.height);
    for (int v = 0; v < img.height; ++v) {
        const double b = cy - v;
        for (int u = 0; u < img.width; ++u) {
            const double a = u - cx;
            const double col = cx + (a * cd + b * sd);
            const double row = cy - (-a * sd + b * cd);
            if (col < 0.0 || row < 0.0 || col > max_c || row > max_r) {
                out.at(u, v) = fill;
                continue;
            }
            const int c0 = static_cast<int>(col);
            const int r0 = static_cast<int>(row);
            const int c1 = std::min(c0 + 1, img.width - 1);
            const int r1 = std::min(r0 + 1, img.height - 1);
            const double fx = col - c0, fy = row - r0;
            const double s = (1.0 - fy) * ((1.0 - fx) * img.at(c0, r0) + fx * img.at(c1, r0)) +
                             fy * ((1.0 - fx) * img.at(c0, r1) + fx * img.at(c1, r1));
            out.at(u, v) = static_cast<float>(s);
        }
    }
    return out;
}

}  // namespace satloc
