#pragma once
// Embedding Exchange format (little-endian), shared with external encoders:
//
//   "EMBX"  u16 version = 1  u32 D  u64 N
//   N x { u64 id, D x binary16 }
//
// The file size must match the header exactly. Values are quantized to half
// precision on write.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "satloc/encoder.hpp"

namespace satloc {

struct EmbeddingRecord {
    std::uint64_t id = 0;
    Embedding values;
};

struct EmbeddingSet {
    std::uint16_t version = 1;
    std::uint32_t dim = 0;
    std::vector<EmbeddingRecord> records;
};

inline constexpr std::size_t kEmbxHeaderBytes = 4 + 2 + 4 + 8;

std::vector<std::uint8_t> serialize_embeddings(std::uint32_t dim, std::span<const EmbeddingRecord> records);

/// Throws FormatError on bad magic/version, size mismatch against the
/// header, duplicate ids or non-finite values.
EmbeddingSet parse_embeddings(std::span<const std::uint8_t> bytes);

void export_embeddings(const std::filesystem::path& path, std::uint32_t dim,
                       std::span<const EmbeddingRecord> records);
EmbeddingSet import_embeddings(const std::filesystem::path& path);

}  // namespace satloc
