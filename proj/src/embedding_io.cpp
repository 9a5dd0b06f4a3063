#include "rankscale/embedding_io.hpp"

#include <cstdio>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rankscale/error.hpp"

namespace rankscale {

namespace {

constexpr std::string_view kMagic = "EMBR";
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

Matrix decode_csv(std::string_view text) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_number;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;

    std::size_t count = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string_view::npos) comma = line.size();
      std::string_view field = line.substr(pos, comma - pos);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
        throw Error(ErrorKind::parse, "embedding CSV line " + std::to_string(line_number) +
                                          ": cannot parse '" + std::string(field) + "'");
      }
      values.push_back(v);
      ++count;
      pos = comma + 1;
    }
    if (cols == 0) cols = count;
    if (count != cols) {
      throw Error(ErrorKind::parse, "embedding CSV line " + std::to_string(line_number) + " has " +
                                        std::to_string(count) + " values, expected " +
                                        std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw Error(ErrorKind::parse, "embedding file is empty");
  return Matrix(rows, cols, std::move(values));
}

}  // namespace

std::string encode_embeddings(const Matrix& m) {
  if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX) {
    throw Error(ErrorKind::invalid_input, "matrix too large for the embedding format");
  }
  std::string out;
  out.reserve(kHeaderBytes + 4 * m.values().size());
  out.append(kMagic);
  put_u32(out, kEmbeddingFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

Matrix decode_embeddings(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) return decode_csv(bytes);
  if (bytes.size() < kHeaderBytes) throw Error(ErrorKind::parse, "truncated embedding header");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kEmbeddingFormatVersion) {
    throw Error(ErrorKind::parse, "unsupported embedding format version " + std::to_string(version));
  }
  const std::uint64_t rows = get_u32(bytes, 8);
  const std::uint64_t cols = get_u32(bytes, 12);
  if (rows == 0 || cols == 0) throw Error(ErrorKind::parse, "embedding matrix has a zero dimension");
  const std::uint64_t expected = kHeaderBytes + 4 * rows * cols;
  if (bytes.size() != expected) {
    throw Error(ErrorKind::parse, "embedding payload is " + std::to_string(bytes.size()) +
                                      " bytes, expected " + std::to_string(expected));
  }
  std::vector<double> values(rows * cols);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
  }
  return Matrix(rows, cols, std::move(values));
}

void write_embeddings(const std::filesystem::path& path, const Matrix& m) {
  const std::string bytes = encode_embeddings(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Matrix read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(read_file_bytes(path));
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rankscale
