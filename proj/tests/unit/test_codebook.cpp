#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "satloc/codebook.hpp"
#include "satloc/half.hpp"
#include "support.hpp"

using namespace satloc;

namespace {

const MapRaster& shared_map()
{
    static const MapRaster map = test::small_map();
    return map;
}

PathSpec path_at_center(double length) { return PathSpec::straight({80.0, 70.0}, 0.0, length); }

/// Small PCA encoder trained on views of the shared map.
const LinearEncoder& shared_encoder()
{
    static const LinearEncoder enc = [] {
        const auto poses = enumerate_grid(path_at_center(3.0), GridSpec{});
        const auto imgs = render_training_set(shared_map(), poses, CameraSpec{}, LightingSpec{}, 20);
        return train_linear_encoder(imgs, 4);
    }();
    return enc;
}

}  // namespace

TEST(Codebook, OneMeterPathHasFortyTwoColumns)
{
    const Codebook cb = build_codebook(shared_map(), path_at_center(1.0), GridSpec{}, CameraSpec{}, shared_encoder(),
                                       LightingSpec{});
    EXPECT_EQ(cb.count(), 42u);
    EXPECT_EQ(cb.dim(), 4);
    EXPECT_EQ(cb.station_count(), 2u);
    EXPECT_EQ(cb.encoder_id, shared_encoder().id());
    EXPECT_NO_THROW(cb.validate());
}

TEST(Codebook, SinglePoseStoresItsEncoding)
{
    GridSpec g;
    g.lateral_extent = 0.0;
    g.along_spacing = 2.0;
    const PathSpec path = path_at_center(1.0);
    const Codebook cb = build_codebook(shared_map(), path, g, CameraSpec{}, shared_encoder(), LightingSpec{});
    ASSERT_EQ(cb.count(), 1u);
    const Embedding want = shared_encoder().encode(render_view(shared_map(), path.pose_at(0.0), CameraSpec{}, LightingSpec{}));
    EXPECT_EQ(Eigen::VectorXd(cb.embeddings.col(0)), want);
    EXPECT_EQ(cb.poses[0], path.pose_at(0.0));
}

TEST(Codebook, RebuildsAreByteIdentical)
{
    LightingSpec light;
    light.shadow_length = 3.0;
    const Codebook a = build_codebook(shared_map(), path_at_center(2.0), GridSpec{}, CameraSpec{}, shared_encoder(), light, 1);
    const Codebook b = build_codebook(shared_map(), path_at_center(2.0), GridSpec{}, CameraSpec{}, shared_encoder(), light, 3);
    EXPECT_EQ(serialize_codebook(a), serialize_codebook(b));
}

TEST(Codebook, SaveLoadRoundTrip)
{
    Codebook cb = build_codebook(shared_map(), path_at_center(2.0), GridSpec{}, CameraSpec{}, shared_encoder(), LightingSpec{});
    const auto dir = test::temp_dir("codebook");
    save_codebook(cb, dir / "c.klcb");
    const Codebook back = load_codebook(dir / "c.klcb");
    cb.quantize();
    EXPECT_EQ(back.grid, cb.grid);
    EXPECT_EQ(back.encoder_id, cb.encoder_id);
    EXPECT_EQ(back.poses, cb.poses);
    EXPECT_EQ(back.arc_length, cb.arc_length);
    EXPECT_EQ(back.embeddings, cb.embeddings);
    EXPECT_EQ(serialize_codebook(back), serialize_codebook(cb));
}

TEST(Codebook, FileSizeMatchesLayout)
{
    for (int dim : {1, 7, 64}) {
        const Codebook cb = test::random_codebook(PathSpec::straight({0, 0}, 0, 3.0), dim, 5);
        const std::size_t n = cb.count();
        const std::size_t header = 4 + 2 + 4 + 8 + 2 + cb.encoder_id.size() + 3 * 8;
        const std::size_t want = header + n * 4 * 8 + n * dim * 2 + 4;
        EXPECT_EQ(serialize_codebook(cb).size(), want);
        EXPECT_EQ(codebook_file_bytes(cb), want);
        EXPECT_EQ(codebook_fixed_bytes(cb.encoder_id), header + 4);
    }
}

TEST(Codebook, TruncationIsDetected)
{
    const auto bytes = serialize_codebook(test::random_codebook(PathSpec::straight({0, 0}, 0, 1.0), 3, 6));
    for (std::size_t len = 0; len < bytes.size(); ++len) {
        EXPECT_THROW(parse_codebook(std::span(bytes.data(), len)), FormatError) << len;
    }
    auto longer = bytes;
    longer.push_back(0);
    EXPECT_THROW(parse_codebook(longer), FormatError);
}

TEST(Codebook, EverySingleByteCorruptionIsDetected)
{
    const auto bytes = serialize_codebook(test::random_codebook(PathSpec::straight({0, 0}, 0, 1.0), 3, 7));
    for (std::size_t pos = 0; pos < bytes.size(); ++pos) {
        for (std::uint8_t flip : {0x01, 0x80, 0xFF}) {
            auto bad = bytes;
            bad[pos] ^= flip;
            EXPECT_THROW(parse_codebook(bad), FormatError) << pos << " ^ " << int(flip);
        }
    }
}

TEST(Codebook, MissingFileIsAnError)
{
    EXPECT_THROW(load_codebook(test::temp_dir("cb_missing") / "nope.klcb"), Error);
}

TEST(Codebook, ValidateCatchesInconsistentTables)
{
    Codebook cb = test::random_codebook(PathSpec::straight({0, 0}, 0, 1.0), 3, 8);
    cb.arc_length.pop_back();
    EXPECT_THROW(cb.validate(), InvalidArgument);
    EXPECT_THROW(serialize_codebook(cb), InvalidArgument);
    cb = test::random_codebook(PathSpec::straight({0, 0}, 0, 1.0), 3, 8);
    cb.poses.pop_back();
    cb.arc_length.pop_back();
    cb.embeddings.conservativeResize(3, static_cast<Eigen::Index>(cb.poses.size()));
    EXPECT_THROW(cb.validate(), InvalidArgument);  // 41 is not a whole number of stations
}

TEST(Window, MidPathWindowHas336Columns)
{
    const PathSpec path = PathSpec::straight({0, 0}, 0, 20.0);
    const Codebook cb = test::random_codebook(path, 2, 1);
    const auto w = select_window(cb, PlanarPose(0.0, 10.0, 0.0), 4.0);
    EXPECT_EQ(w.size(), 336u);
    EXPECT_TRUE(std::is_sorted(w.begin(), w.end()));
    // [6, 14): stations 12..27.
    EXPECT_EQ(w.front(), 12u * 21u);
    EXPECT_EQ(w.back(), 28u * 21u - 1);
    // A lateral offset of the prior does not change the window.
    EXPECT_EQ(select_window(cb, PlanarPose(3.0, 10.0, 0.0), 4.0), w);
}

TEST(Window, MinimalWindowIsOneStation)
{
    const Codebook cb = test::random_codebook(PathSpec::straight({0, 0}, 0, 20.0), 2, 1);
    const auto w = select_window(cb, PlanarPose(0.0, 5.0, 0.0), 0.25);
    ASSERT_EQ(w.size(), 21u);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(w[i], 10u * 21u + i);
}

TEST(Window, ClippedAtPathStart)
{
    const Codebook cb = test::random_codebook(PathSpec::straight({0, 0}, 0, 20.0), 2, 1);
    // [-3, 5) keeps stations 0 .. 4.5.
    EXPECT_EQ(select_window(cb, PlanarPose(0.0, 1.0, 0.0), 4.0).size(), 210u);
    // Before the start the projection clamps to s = 0: [-4, 4).
    EXPECT_EQ(select_window(cb, PlanarPose(0.0, -2.0, 0.0), 4.0).size(), 168u);
}

TEST(Window, FarPriorIsOutOfBounds)
{
    const Codebook cb = test::random_codebook(PathSpec::straight({0, 0}, 0, 20.0), 2, 1);
    EXPECT_NO_THROW(select_window(cb, PlanarPose(9.0, 10.0, 0.0), 4.0));
    EXPECT_THROW(select_window(cb, PlanarPose(9.5, 10.0, 0.0), 4.0), OutOfBounds);
    EXPECT_THROW(select_window(cb, PlanarPose(0.0, 40.0, 0.0), 4.0), OutOfBounds);
    EXPECT_THROW(select_window(cb, PlanarPose(0.0, 10.0, 0.0), 0.0), InvalidArgument);
    EXPECT_THROW(select_window(Codebook{}, PlanarPose(0.0, 10.0, 0.0), 4.0), OutOfBounds);
}

TEST(Window, MatchesBruteForceOnCurvedPath)
{
    PathSpec path;
    path.waypoints = {{0, 0}, {0, 10}, {8, 16}};
    const Codebook cb = test::random_codebook(path, 2, 2);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ux(-3, 9), uy(-2, 18);
    for (int trial = 0; trial < 100; ++trial) {
        const PlanarPose prior(ux(rng), uy(rng), 0.0);
        // Nearest point on the true path, then all stations within [s0 - 4, s0 + 4).
        double best = 1e300, s0 = 0.0;
        for (int k = 0; k <= 19000; ++k) {
            const double s = k * 0.001;
            const PlanarPose p = path.pose_at(s);
            const double d = std::hypot(p.x - prior.x, p.y - prior.y);
            if (d < best) best = d, s0 = s;
        }
        std::vector<std::size_t> want;
        for (std::size_t i = 0; i < cb.count(); ++i) {
            if (cb.arc_length[i] >= s0 - 4.0 && cb.arc_length[i] < s0 + 4.0) want.push_back(i);
        }
        // Stations within 1 mm of a window edge may legitimately fall either side.
        const bool near_edge = std::any_of(cb.arc_length.begin(), cb.arc_length.end(), [&](double s) {
            return std::abs(s - (s0 - 4.0)) < 2e-3 || std::abs(s - (s0 + 4.0)) < 2e-3;
        });
        if (best > 9.0 || near_edge) continue;
        EXPECT_EQ(select_window(cb, prior, 4.0), want) << prior.x << "," << prior.y;
    }
}

TEST(Codebook, ImportedEmbeddingsFollowIds)
{
    const PathSpec path = PathSpec::straight({0, 0}, 0, 2.0);
    const std::size_t n = enumerate_grid(path, GridSpec{}).size();
    std::vector<EmbeddingRecord> recs(n);
    for (std::size_t i = 0; i < n; ++i) {
        recs[i].id = i;
        recs[i].values = Eigen::Vector2d(double(i), -0.5 * double(i));
    }
    std::mt19937_64 rng(9);
    std::shuffle(recs.begin(), recs.end(), rng);
    const EmbeddingSet set = parse_embeddings(serialize_embeddings(2, recs));
    const Codebook cb = codebook_from_embeddings(path, GridSpec{}, set, "external");
    ASSERT_EQ(cb.count(), n);
    for (std::size_t i = 0; i < n; ++i) {
        EXPECT_EQ(cb.embeddings(0, static_cast<Eigen::Index>(i)), quantize_half(double(i)));
        EXPECT_EQ(cb.embeddings(1, static_cast<Eigen::Index>(i)), quantize_half(-0.5 * double(i)));
    }
    EXPECT_EQ(cb.encoder_id, "external");

    EmbeddingSet short_set = set;
    short_set.records.pop_back();
    EXPECT_THROW(codebook_from_embeddings(path, GridSpec{}, short_set, "x"), InvalidArgument);
    EmbeddingSet out_of_range = set;
    out_of_range.records[0].id = n;
    EXPECT_THROW(codebook_from_embeddings(path, GridSpec{}, out_of_range, "x"), InvalidArgument);
}

TEST(Codebook, BuildReportsOffMapPose)
{
    const PathSpec path = PathSpec::straight({10.0, 70.0}, 0.0, 1.0);
    EXPECT_THROW(build_codebook(shared_map(), path, GridSpec{}, CameraSpec{}, shared_encoder(), LightingSpec{}), OutOfBounds);
}
