#include "satloc/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "byteio.hpp"
#include "satloc/half.hpp"
#include "satloc/parallel.hpp"

namespace satloc {
namespace {

constexpr std::uint16_t kCodebookVersion = 1;

template <class E>
[[noreturn]] void rethrow_with_index(const E& e, std::size_t index)
{
    throw E("grid pose " + std::to_string(index) + ": " + e.what());
}

std::vector<Point2> centerline(const Codebook& cb, std::vector<double>& arcs)
{
    const std::size_t lateral = static_cast<std::size_t>(cb.grid.lateral_count());
    const std::size_t mid = lateral / 2;
    std::vector<Point2> pts;
    const std::size_t stations = cb.station_count();
    pts.reserve(stations);
    arcs.clear();
    arcs.reserve(stations);
    for (std::size_t k = 0; k < stations; ++k) {
        const PlanarPose& p = cb.poses[k * lateral + mid];
        pts.push_back({p.x, p.y});
        arcs.push_back(cb.arc_length[k * lateral]);
    }
    return pts;
}

}  // namespace

std::size_t Codebook::station_count() const
{
    const auto lateral = static_cast<std::size_t>(grid.lateral_count());
    return lateral ? count() / lateral : 0;
}

void Codebook::validate() const
{
    grid.validate();
    if (embeddings.rows() < 1) throw InvalidArgument("codebook: embedding dimension must be >= 1");
    if (arc_length.size() != poses.size() || static_cast<std::size_t>(embeddings.cols()) != poses.size()) {
        throw InvalidArgument("codebook: pose, arc length and embedding counts differ");
    }
    if (count() % static_cast<std::size_t>(grid.lateral_count()) != 0) {
        throw InvalidArgument("codebook: column count is not a whole number of grid stations");
    }
}

void Codebook::quantize()
{
    double* v = embeddings.data();
    for (Eigen::Index i = 0; i < embeddings.size(); ++i) v[i] = quantize_half(v[i]);
}

Codebook build_codebook(const MapRaster& map, const PathSpec& path, const GridSpec& grid,
                        const CameraSpec& cam, const Encoder& encoder, const LightingSpec& light,
                        unsigned threads)
{
    const std::vector<GridPose> grid_poses = enumerate_grid(path, grid);
    light.validate();
    ShadowLayer shadows;
    if (light.shadow_length > 0.0) shadows = ShadowLayer(map, light.sun_azimuth, light.shadow_length);

    Codebook cb;
    cb.grid = grid;
    cb.encoder_id = encoder.id();
    cb.poses.reserve(grid_poses.size());
    cb.arc_length.reserve(grid_poses.size());
    for (const GridPose& g : grid_poses) {
        cb.poses.push_back(g.pose);
        cb.arc_length.push_back(g.arc_length);
    }
    cb.embeddings.resize(encoder.dim(), static_cast<Eigen::Index>(grid_poses.size()));

    parallel_for(grid_poses.size(), threads, [&](std::size_t i) {
        try {
            const Image view = render_view(map, shadows, grid_poses[i].pose, cam, light);
            const Embedding e = encoder.encode(view);
            if (e.size() != cb.embeddings.rows()) throw InvalidArgument("encoder returned wrong dimension");
            cb.embeddings.col(static_cast<Eigen::Index>(i)) = e;
        } catch (const OutOfBounds& e) {
            rethrow_with_index(e, i);
        } catch (const InvalidArgument& e) {
            rethrow_with_index(e, i);
        }
    });
    return cb;
}

Codebook codebook_from_embeddings(const PathSpec& path, const GridSpec& grid, const EmbeddingSet& set,
                                  std::string encoder_id)
{
    const std::vector<GridPose> grid_poses = enumerate_grid(path, grid);
    if (set.records.size() != grid_poses.size()) {
        throw InvalidArgument("imported embeddings: " + std::to_string(set.records.size()) +
                              " records for a grid of " + std::to_string(grid_poses.size()) + " poses");
    }
    Codebook cb;
    cb.grid = grid;
    cb.encoder_id = std::move(encoder_id);
    cb.embeddings.resize(set.dim, static_cast<Eigen::Index>(grid_poses.size()));
    std::vector<bool> filled(grid_poses.size(), false);
    for (const EmbeddingRecord& rec : set.records) {
        if (rec.id >= grid_poses.size() || filled[rec.id]) {
            throw InvalidArgument("imported embeddings: id " + std::to_string(rec.id) +
                                  " is not a unique grid column index");
        }
        filled[rec.id] = true;
        cb.embeddings.col(static_cast<Eigen::Index>(rec.id)) = rec.values;
    }
    for (const GridPose& g : grid_poses) {
        cb.poses.push_back(g.pose);
        cb.arc_length.push_back(g.arc_length);
    }
    return cb;
}

std::vector<Image> render_training_set(const MapRaster& map, std::span<const GridPose> grid_poses,
                                       const CameraSpec& cam, const LightingSpec& light,
                                       std::size_t max_images, unsigned threads)
{
    if (grid_poses.empty() || max_images == 0) return {};
    const std::size_t stride = (grid_poses.size() + max_images - 1) / max_images;
    std::vector<std::size_t> picks;
    for (std::size_t i = 0; i < grid_poses.size(); i += stride) picks.push_back(i);

    ShadowLayer shadows;
    if (light.shadow_length > 0.0) shadows = ShadowLayer(map, light.sun_azimuth, light.shadow_length);
    std::vector<Image> images(picks.size());
    parallel_for(picks.size(), threads, [&](std::size_t i) {
        images[i] = render_view(map, shadows, grid_poses[picks[i]].pose, cam, light);
    });
    return images;
}

std::size_t codebook_fixed_bytes(const std::string& encoder_id)
{
    return 4 + 2 + 4 + 8 + 2 + encoder_id.size() + 3 * 8 + 4;
}

std::size_t codebook_file_bytes(const Codebook& cb)
{
    return codebook_fixed_bytes(cb.encoder_id) +
           cb.count() * (kPoseRecordBytes + 2 * static_cast<std::size_t>(cb.dim()));
}

std::vector<std::uint8_t> serialize_codebook(const Codebook& cb)
{
    cb.validate();
    if (cb.encoder_id.size() > 0xFFFF) throw InvalidArgument("codebook: encoder_id too long");
    detail::ByteWriter w;
    w.buffer().reserve(codebook_file_bytes(cb));
    w.bytes("KLCB");
    w.u16(kCodebookVersion);
    w.u32(static_cast<std::uint32_t>(cb.dim()));
    w.u64(cb.count());
    w.u16(static_cast<std::uint16_t>(cb.encoder_id.size()));
    w.bytes(cb.encoder_id);
    w.f64(cb.grid.along_spacing);
    w.f64(cb.grid.lateral_extent);
    w.f64(cb.grid.lateral_spacing);
    for (std::size_t i = 0; i < cb.count(); ++i) {
        w.f64(cb.poses[i].x);
        w.f64(cb.poses[i].y);
        w.f64(cb.poses[i].heading);
        w.f64(cb.arc_length[i]);
    }
    const double* v = cb.embeddings.data();
    for (Eigen::Index i = 0; i < cb.embeddings.size(); ++i) w.u16(double_to_half(v[i]));
    w.u32(detail::crc32_of(w.buffer()));
    return std::move(w.buffer());
}

Codebook parse_codebook(std::span<const std::uint8_t> bytes)
{
    detail::ByteReader r(bytes, "codebook");
    if (bytes.size() < 4) throw FormatError("codebook: truncated payload");
    // Verify the checksum first so later header checks see trustworthy data.
    const std::uint32_t crc = detail::crc32_of(bytes.first(bytes.size() - 4));
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= std::uint32_t{bytes[bytes.size() - 4 + i]} << (8 * i);

    if (r.bytes(4) != "KLCB") throw FormatError("codebook: bad magic");
    const std::uint16_t version = r.u16();
    if (version != kCodebookVersion) throw FormatError("codebook: unsupported version " + std::to_string(version));
    const std::uint32_t dim = r.u32();
    const std::uint64_t count = r.u64();
    const std::uint16_t id_len = r.u16();
    Codebook cb;
    cb.encoder_id = r.bytes(id_len);
    cb.grid.along_spacing = r.f64();
    cb.grid.lateral_extent = r.f64();
    cb.grid.lateral_spacing = r.f64();

    const std::uint64_t per_column = kPoseRecordBytes + 2 * std::uint64_t{dim};
    if (dim == 0 || count > (r.remaining() - std::min<std::size_t>(r.remaining(), 4)) / per_column ||
        count * per_column + 4 != r.remaining()) {
        throw FormatError("codebook: size does not match header (D=" + std::to_string(dim) +
                          ", N=" + std::to_string(count) + ")");
    }
    if (crc != stored) throw FormatError("codebook: checksum mismatch");

    cb.poses.resize(count);
    cb.arc_length.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        PlanarPose& p = cb.poses[i];
        p.x = r.f64();
        p.y = r.f64();
        p.heading = r.f64();
        cb.arc_length[i] = r.f64();
    }
    std::vector<std::uint16_t> halves(count * dim);
    for (auto& h : halves) h = r.u16();
    cb.embeddings.resize(dim, static_cast<Eigen::Index>(count));
    decode_half(halves, std::span<double>(cb.embeddings.data(), halves.size()));

    try {
        cb.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("codebook: ") + e.what());
    }
    return cb;
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path)
{
    detail::write_file(path, serialize_codebook(cb));
}

Codebook load_codebook(const std::filesystem::path& path)
{
    return parse_codebook(detail::read_file(path));
}

Projection project_prior(const Codebook& cb, const PlanarPose& prior)
{
    if (cb.count() == 0) throw OutOfBounds("codebook is empty");
    std::vector<double> arcs;
    const std::vector<Point2> pts = centerline(cb, arcs);
    return project_onto_polyline(pts, arcs, {prior.x, prior.y});
}

std::vector<std::size_t> select_window(const Codebook& cb, const PlanarPose& prior, double half_window)
{
    if (!(half_window > 0.0)) throw InvalidArgument("select_window: half_window must be positive");
    const Projection proj = project_prior(cb, prior);
    if (proj.distance > cb.grid.lateral_extent + half_window) {
        throw OutOfBounds("select_window: prior is " + std::to_string(proj.distance) +
                          " m from the mapped path");
    }
    const double lo = proj.arc_length - half_window;
    const double hi = proj.arc_length + half_window;
    const std::size_t lateral = static_cast<std::size_t>(cb.grid.lateral_count());
    std::vector<std::size_t> out;
    for (std::size_t k = 0, stations = cb.station_count(); k < stations; ++k) {
        const double s = cb.arc_length[k * lateral];
        if (s < lo || s >= hi) continue;
        for (std::size_t j = 0; j < lateral; ++j) out.push_back(k * lateral + j);
    }
    if (out.empty()) throw OutOfBounds("select_window: no reference columns near the prior");
    return out;
}

}  // namespace satloc
