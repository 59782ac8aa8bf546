#include "satloc/embedding_io.hpp"

#include <cmath>
#include <unordered_set>

#include "byteio.hpp"
#include "satloc/half.hpp"

namespace satloc {

std::vector<std::uint8_t> serialize_embeddings(std::uint32_t dim, std::span<const EmbeddingRecord> records)
{
    if (dim == 0) throw InvalidArgument("export_embeddings: dimension must be >= 1");
    detail::ByteWriter w;
    w.bytes("EMBX");
    w.u16(1);
    w.u32(dim);
    w.u64(records.size());
    for (const EmbeddingRecord& rec : records) {
        if (rec.values.size() != static_cast<Eigen::Index>(dim)) {
            throw InvalidArgument("export_embeddings: record " + std::to_string(rec.id) + " has " +
                                  std::to_string(rec.values.size()) + " values, expected " + std::to_string(dim));
        }
        w.u64(rec.id);
        for (Eigen::Index i = 0; i < rec.values.size(); ++i) w.u16(double_to_half(rec.values[i]));
    }
    return std::move(w.buffer());
}

EmbeddingSet parse_embeddings(std::span<const std::uint8_t> bytes)
{
    detail::ByteReader r(bytes, "embedding file");
    r.need(kEmbxHeaderBytes);
    if (r.bytes(4) != "EMBX") throw FormatError("embedding file: bad magic");
    EmbeddingSet set;
    set.version = r.u16();
    if (set.version != 1) throw FormatError("embedding file: unsupported version " + std::to_string(set.version));
    set.dim = r.u32();
    const std::uint64_t count = r.u64();
    if (set.dim == 0) throw FormatError("embedding file: zero dimension");

    const std::uint64_t record_bytes = 8 + 2 * std::uint64_t{set.dim};
    if (count > r.remaining() / record_bytes || count * record_bytes != r.remaining()) {
        throw FormatError("embedding file: payload of " + std::to_string(r.remaining()) +
                          " bytes does not hold " + std::to_string(count) + " records of D=" +
                          std::to_string(set.dim));
    }

    std::unordered_set<std::uint64_t> seen;
    std::vector<std::uint16_t> halves(set.dim);
    set.records.reserve(count);
    for (std::uint64_t n = 0; n < count; ++n) {
        EmbeddingRecord rec;
        rec.id = r.u64();
        if (!seen.insert(rec.id).second) throw FormatError("embedding file: duplicate id " + std::to_string(rec.id));
        for (auto& h : halves) h = r.u16();
        rec.values.resize(set.dim);
        decode_half(halves, std::span<double>(rec.values.data(), set.dim));
        if (!rec.values.allFinite()) throw FormatError("embedding file: non-finite value in record " + std::to_string(rec.id));
        set.records.push_back(std::move(rec));
    }
    return set;
}

void export_embeddings(const std::filesystem::path& path, std::uint32_t dim,
                       std::span<const EmbeddingRecord> records)
{
    detail::write_file(path, serialize_embeddings(dim, records));
}

EmbeddingSet import_embeddings(const std::filesystem::path& path)
{
    return parse_embeddings(detail::read_file(path));
}

}  // namespace satloc
