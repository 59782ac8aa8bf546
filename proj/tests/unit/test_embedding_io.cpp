#include <gtest/gtest.h>

#include <cstring>
#include <limits>

#include "satloc/embedding_io.hpp"
#include "satloc/half.hpp"
#include "support.hpp"

using namespace satloc;

namespace {

EmbeddingRecord record(std::uint64_t id, std::initializer_list<double> v)
{
    EmbeddingRecord r;
    r.id = id;
    r.values.resize(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) r.values[i++] = x;
    return r;
}

void put_u64(std::vector<std::uint8_t>& b, std::size_t at, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

}  // namespace

TEST(EmbeddingIo, ThreeVectorsRoundTrip)
{
    const std::vector<EmbeddingRecord> recs{record(0, {0.1, -0.2, 3.0}), record(7, {1.0, 2.0, 4.5}),
                                            record(3, {-1e-3, 0.0, 100.0})};
    const auto bytes = serialize_embeddings(3, recs);
    EXPECT_EQ(bytes.size(), kEmbxHeaderBytes + 3 * (8 + 3 * 2));
    EXPECT_EQ(std::memcmp(bytes.data(), "EMBX", 4), 0);
    const EmbeddingSet set = parse_embeddings(bytes);
    EXPECT_EQ(set.version, 1);
    EXPECT_EQ(set.dim, 3u);
    ASSERT_EQ(set.records.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(set.records[i].id, recs[i].id);
        for (Eigen::Index k = 0; k < 3; ++k) EXPECT_EQ(set.records[i].values[k], quantize_half(recs[i].values[k]));
    }
    EXPECT_EQ(serialize_embeddings(3, set.records), bytes);

    const auto dir = test::temp_dir("embx");
    export_embeddings(dir / "e.embx", 3, recs);
    EXPECT_EQ(serialize_embeddings(3, import_embeddings(dir / "e.embx").records), bytes);
}

TEST(EmbeddingIo, HeaderLayoutIsLittleEndian)
{
    const auto bytes = serialize_embeddings(1000, {});
    ASSERT_EQ(bytes.size(), kEmbxHeaderBytes);
    EXPECT_EQ(bytes[4], 1);  // version
    EXPECT_EQ(bytes[5], 0);
    EXPECT_EQ(bytes[6], 1000 & 0xFF);
    EXPECT_EQ(bytes[7], 1000 >> 8);
}

TEST(EmbeddingIo, EmptySetIsValid)
{
    const EmbeddingSet set = parse_embeddings(serialize_embeddings(8, {}));
    EXPECT_EQ(set.dim, 8u);
    EXPECT_TRUE(set.records.empty());
}

TEST(EmbeddingIo, ShortRowIsRejected)
{
    // Header claims D = 1000 but the only row carries 999 values.
    auto bytes = serialize_embeddings(1000, {});
    put_u64(bytes, 10, 1);
    bytes.resize(bytes.size() + 8 + 999 * 2, 0);
    EXPECT_THROW(parse_embeddings(bytes), FormatError);
    bytes.resize(bytes.size() + 2, 0);
    EXPECT_NO_THROW(parse_embeddings(bytes));
}

TEST(EmbeddingIo, TrailingBytesAreRejected)
{
    auto bytes = serialize_embeddings(2, std::vector{record(0, {1.0, 2.0})});
    bytes.push_back(0);
    EXPECT_THROW(parse_embeddings(bytes), FormatError);
}

TEST(EmbeddingIo, HugeCountIsRejected)
{
    auto bytes = serialize_embeddings(2, std::vector{record(0, {1.0, 2.0})});
    put_u64(bytes, 10, std::numeric_limits<std::uint64_t>::max());
    EXPECT_THROW(parse_embeddings(bytes), FormatError);
}

TEST(EmbeddingIo, BadMagicAndVersionAreRejected)
{
    const auto good = serialize_embeddings(2, std::vector{record(0, {1.0, 2.0})});
    auto bad = good;
    bad[0] = 'X';
    EXPECT_THROW(parse_embeddings(bad), FormatError);
    bad = good;
    bad[4] = 2;
    EXPECT_THROW(parse_embeddings(bad), FormatError);
    bad = good;
    bad[6] = bad[7] = bad[8] = bad[9] = 0;  // D = 0
    EXPECT_THROW(parse_embeddings(bad), FormatError);
    EXPECT_THROW(parse_embeddings(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)), FormatError);
}

TEST(EmbeddingIo, DuplicateIdsAreRejected)
{
    const auto bytes = serialize_embeddings(2, std::vector{record(4, {1.0, 2.0}), record(4, {3.0, 4.0})});
    EXPECT_THROW(parse_embeddings(bytes), FormatError);
}

TEST(EmbeddingIo, NonFiniteValuesAreRejected)
{
    // 1e6 overflows binary16 to infinity on write.
    EXPECT_THROW(parse_embeddings(serialize_embeddings(2, std::vector{record(0, {1.0, 1e6})})), FormatError);
    auto bytes = serialize_embeddings(2, std::vector{record(0, {1.0, 2.0})});
    bytes[kEmbxHeaderBytes + 8] = 0x00;
    bytes[kEmbxHeaderBytes + 9] = 0x7E;  // NaN
    EXPECT_THROW(parse_embeddings(bytes), FormatError);
}

TEST(EmbeddingIo, WriterRejectsMismatchedRecords)
{
    EXPECT_THROW(serialize_embeddings(3, std::vector{record(0, {1.0, 2.0})}), InvalidArgument);
    EXPECT_THROW(serialize_embeddings(0, {}), InvalidArgument);
}

TEST(EmbeddingIo, MissingFileIsAnError)
{
    EXPECT_THROW(import_embeddings(test::temp_dir("embx_missing") / "nope.embx"), Error);
}
