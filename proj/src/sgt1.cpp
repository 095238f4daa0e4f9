#include "sgnet/sgt1.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "sgnet/errors.hpp"

namespace sgnet::sgt1 {
namespace {

constexpr char kMagic[4] = {'S', 'G', 'T', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
      static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw IoError("SGT1: truncated header");
  }
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
         std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

std::array<int, 4> extents(const Shape& s) { return {s.n, s.c, s.h, s.w}; }

}  // namespace

void write(std::ostream& os, const Tensor& t, int rank) {
  if (rank < 1 || rank > 4) throw UsageError("SGT1: rank must be 1..4");
  const auto ext = extents(t.shape());
  for (int i = 0; i < 4 - rank; ++i) {
    if (ext[i] != 1) {
      throw UsageError("SGT1: cannot write " + t.shape().str() +
                       " with rank " + std::to_string(rank));
    }
  }
  os.write(kMagic, 4);
  put_u32(os, static_cast<std::uint32_t>(rank));
  for (int i = 4 - rank; i < 4; ++i) put_u32(os, ext[i]);
  for (double v : t.data()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
    os.write(reinterpret_cast<const char*>(b), 8);
  }
}

Tensor read(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("SGT1: bad magic");
  }
  const std::uint32_t rank = get_u32(is);
  if (rank < 1 || rank > 4) {
    throw IoError("SGT1: unsupported rank " + std::to_string(rank));
  }
  std::array<int, 4> ext{1, 1, 1, 1};
  for (std::uint32_t i = 0; i < rank; ++i) {
    ext[4 - rank + i] = static_cast<int>(get_u32(is));
  }
  Tensor t(Shape{ext[0], ext[1], ext[2], ext[3]});
  auto d = t.mutable_data();
  std::vector<unsigned char> buf(d.size() * 8);
  if (!is.read(reinterpret_cast<char*>(buf.data()), buf.size())) {
    throw IoError("SGT1: truncated payload");
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= std::uint64_t(buf[8 * i + k]) << (8 * k);
    d[i] = std::bit_cast<double>(bits);
  }
  return t;
}

void save(const std::filesystem::path& path, const Tensor& t, int rank) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  write(os, t, rank);
  if (!os) throw IoError("write failed: " + path.string());
}

Tensor load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  try {
    return read(is);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::size_t encoded_size(const Tensor& t, int rank) {
  return 8 + 4 * static_cast<std::size_t>(rank) + 8 * t.numel();
}

}  // namespace sgnet::sgt1
