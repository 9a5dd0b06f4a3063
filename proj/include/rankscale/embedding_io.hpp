#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "rankscale/numerics.hpp"

namespace rankscale {

/// Binary embedding layout: magic "EMBR", u32 version (1), u32 rows, u32 cols,
/// then rows·cols little-endian IEEE-754 float32 values, row-major.
inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

/// Writes `m` in the binary layout. Values are narrowed to float32.
void write_embeddings(const std::filesystem::path& path, const Matrix& m);
std::string encode_embeddings(const Matrix& m);

/// Reads the binary layout, or falls back to CSV (one embedding per line,
/// comma-separated) when the magic bytes are absent.
Matrix read_embeddings(const std::filesystem::path& path);
Matrix decode_embeddings(std::string_view bytes);

/// FNV-1a 64-bit digest as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace rankscale
