#include "satloc/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "json.hpp"

namespace satloc {
namespace {

using json = nlohmann::json;

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode)
{
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw Error("cannot open " + path.string());
    return f;
}

void write_gray8(const std::filesystem::path& path, int width, int height,
                 const std::vector<std::uint8_t>& data)
{
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("failed writing PNG " + path.string());
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < height; ++r) {
        png_write_row(png, data.data() + static_cast<std::size_t>(r) * width);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> read_gray8(const std::filesystem::path& path, int& width, int& height)
{
    FilePtr f = open_file(path, "rb");
    png_byte sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw FormatError("not a PNG file: " + path.string());
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> data;
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("corrupt PNG " + path.string());
    }
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    // Normalize anything readable to 8-bit gray.
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (depth == 16) png_set_strip_16(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    png_read_update_info(png, info);

    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    data.resize(static_cast<std::size_t>(width) * height);
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int r = 0; r < height; ++r) rows[r] = data.data() + static_cast<std::size_t>(r) * width;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return data;
}

std::uint8_t to_byte(float v)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0));
}

std::filesystem::path with_suffix(const std::filesystem::path& base, const char* suffix)
{
    return std::filesystem::path(base.string() + suffix);
}

void write_json(const std::filesystem::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& img)
{
    std::vector<std::uint8_t> bytes(img.pixels.size());
    std::transform(img.pixels.begin(), img.pixels.end(), bytes.begin(), to_byte);
    write_gray8(path, img.width, img.height, bytes);
}

Image read_png(const std::filesystem::path& path)
{
    int w = 0, h = 0;
    const auto bytes = read_gray8(path, w, h);
    Image img(w, h);
    for (std::size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = static_cast<float>(bytes[i] / 255.0);
    return img;
}

void save_map(const MapRaster& map, const std::filesystem::path& base)
{
    std::vector<std::uint8_t> bytes(map.pixels.size());
    std::transform(map.pixels.begin(), map.pixels.end(), bytes.begin(), to_byte);
    write_gray8(with_suffix(base, ".png"), map.width_px, map.height_px, bytes);

    std::vector<std::uint8_t> occ(map.occluders.size());
    std::transform(map.occluders.begin(), map.occluders.end(), occ.begin(),
                   [](std::uint8_t o) -> std::uint8_t { return o ? 255 : 0; });
    write_gray8(with_suffix(base, ".occ.png"), map.width_px, map.height_px, occ);

    json j;
    j["width_px"] = map.width_px;
    j["height_px"] = map.height_px;
    j["meters_per_pixel"] = map.meters_per_pixel;
    j["origin_x"] = map.origin_x;
    j["origin_y"] = map.origin_y;
    j["seed"] = map.seed;
    j["image"] = with_suffix(base, ".png").filename().string();
    j["occluders"] = with_suffix(base, ".occ.png").filename().string();
    write_json(with_suffix(base, ".json"), j);
}

MapRaster load_map(const std::filesystem::path& base)
{
    const auto sidecar = with_suffix(base, ".json");
    std::ifstream in(sidecar);
    if (!in) throw Error("cannot open map sidecar " + sidecar.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("bad map sidecar " + sidecar.string() + ": " + e.what());
    }

    MapRaster map;
    try {
        map.meters_per_pixel = j.at("meters_per_pixel").get<double>();
        map.origin_x = j.value("origin_x", 0.0);
        map.origin_y = j.value("origin_y", 0.0);
        map.seed = j.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw FormatError("bad map sidecar " + sidecar.string() + ": " + e.what());
    }
    if (!(map.meters_per_pixel > 0.0)) throw FormatError("map sidecar: meters_per_pixel must be positive");

    int w = 0, h = 0;
    const auto bytes = read_gray8(with_suffix(base, ".png"), w, h);
    map.width_px = w;
    map.height_px = h;
    map.pixels.resize(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) map.pixels[i] = static_cast<float>(bytes[i] / 255.0);

    const auto occ_path = with_suffix(base, ".occ.png");
    if (std::filesystem::exists(occ_path)) {
        int ow = 0, oh = 0;
        const auto occ = read_gray8(occ_path, ow, oh);
        if (ow != w || oh != h) throw FormatError("occluder mask size differs from map");
        map.occluders.resize(occ.size());
        std::transform(occ.begin(), occ.end(), map.occluders.begin(),
                       [](std::uint8_t o) -> std::uint8_t { return o >= 128 ? 1 : 0; });
    } else {
        // Imported imagery without object annotations casts no shadows.
        map.occluders.assign(bytes.size(), 0);
    }
    return map;
}

void save_view(const std::filesystem::path& png_path, const Image& img, const PlanarPose& pose,
               const CameraSpec& cam, const LightingSpec& light)
{
    write_png(png_path, img);
    json j;
    j["pose"] = {{"x", pose.x}, {"y", pose.y}, {"heading", pose.heading}};
    j["footprint"] = {{"width", cam.footprint_width}, {"height", cam.footprint_height}};
    j["lighting"] = {{"sun_azimuth", light.sun_azimuth},     {"shadow_length", light.shadow_length},
                     {"brightness_gain", light.brightness_gain}, {"gamma", light.gamma},
                     {"noise_sigma", light.noise_sigma},     {"noise_seed", light.noise_seed}};
    auto sidecar = png_path;
    sidecar.replace_extension(".json");
    write_json(sidecar, j);
}

}  // namespace satloc
