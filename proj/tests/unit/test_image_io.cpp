#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "satloc/image_io.hpp"
#include "support.hpp"

using namespace satloc;

TEST(ImageIo, PngRoundTripQuantizesToEightBits)
{
    const auto dir = test::temp_dir("png");
    Image img(7, 5);
    for (std::size_t i = 0; i < img.size(); ++i) img.pixels[i] = static_cast<float>(i) / 34.0f;
    img.pixels[0] = -0.5f;  // clamped
    img.pixels[1] = 2.0f;
    write_png(dir / "a.png", img);
    const Image back = read_png(dir / "a.png");
    ASSERT_EQ(back.width, 7);
    ASSERT_EQ(back.height, 5);
    EXPECT_EQ(back.pixels[0], 0.0f);
    EXPECT_EQ(back.pixels[1], 1.0f);
    for (std::size_t i = 2; i < img.size(); ++i) {
        EXPECT_NEAR(back.pixels[i], img.pixels[i], 0.5 / 255.0 + 1e-7);
    }
    // A second cycle is lossless.
    write_png(dir / "b.png", back);
    EXPECT_TRUE(read_png(dir / "b.png") == back);
}

TEST(ImageIo, MapRoundTripIsExact)
{
    const auto dir = test::temp_dir("map");
    MapSpec spec;
    spec.width_px = 200;
    spec.height_px = 120;
    spec.meters_per_pixel = 0.5;
    spec.origin_x = -10.0;
    spec.origin_y = 30.0;
    const MapRaster m = generate_map(spec, 21);
    save_map(m, dir / "m");
    EXPECT_TRUE(std::filesystem::exists(dir / "m.png"));
    EXPECT_TRUE(std::filesystem::exists(dir / "m.occ.png"));
    EXPECT_TRUE(std::filesystem::exists(dir / "m.json"));
    const MapRaster back = load_map(dir / "m");
    EXPECT_TRUE(back == m);
}

TEST(ImageIo, MissingOccluderMaskMeansNoShadows)
{
    const auto dir = test::temp_dir("noocc");
    MapSpec spec;
    spec.width_px = spec.height_px = 64;
    const MapRaster m = generate_map(spec, 2);
    save_map(m, dir / "m");
    std::filesystem::remove(dir / "m.occ.png");
    const MapRaster back = load_map(dir / "m");
    EXPECT_EQ(back.pixels, m.pixels);
    ASSERT_EQ(back.occluders.size(), m.pixels.size());
    for (auto o : back.occluders) ASSERT_EQ(o, 0);
}

TEST(ImageIo, BadFilesAreReported)
{
    const auto dir = test::temp_dir("badpng");
    EXPECT_THROW(read_png(dir / "missing.png"), Error);
    {
        std::ofstream out(dir / "junk.png", std::ios::binary);
        out << "definitely not a png";
    }
    EXPECT_THROW(read_png(dir / "junk.png"), FormatError);
    EXPECT_THROW(load_map(dir / "nothing"), Error);
    {
        std::ofstream out(dir / "bad.json");
        out << "{ not json";
    }
    EXPECT_THROW(load_map(dir / "bad"), FormatError);
}
