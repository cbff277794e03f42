#include "codeil/binary_io.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "codeil/error.h"

namespace codeil {

static_assert(std::endian::native == std::endian::little,
              "file containers assume a little-endian host");

void ByteWriter::U32(std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  data_.append(buf, 4);
}

void ByteWriter::U64(std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  data_.append(buf, 8);
}

void ByteWriter::F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::Bytes(std::string_view bytes) { data_.append(bytes); }

void ByteWriter::String(std::string_view s) {
  U32(static_cast<std::uint32_t>(s.size()));
  Bytes(s);
}

std::string ByteWriter::Finish() const {
  ByteWriter out = *this;
  out.U64(Fnv1a(data_));
  return out.data_;
}

ByteReader ByteReader::Open(std::string_view bytes, const std::string& what) {
  if (bytes.size() < 8) throw DataError(what + ": file truncated");
  std::string_view payload = bytes.substr(0, bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + payload.size(), 8);
  if (stored != Fnv1a(payload)) {
    throw DataError(what + ": checksum mismatch (corrupt or truncated file)");
  }
  return ByteReader(payload, what);
}

std::uint32_t ByteReader::U32() {
  std::uint32_t v;
  std::memcpy(&v, Bytes(4).data(), 4);
  return v;
}

std::uint64_t ByteReader::U64() {
  std::uint64_t v;
  std::memcpy(&v, Bytes(8).data(), 8);
  return v;
}

double ByteReader::F64() { return std::bit_cast<double>(U64()); }

std::string_view ByteReader::Bytes(std::size_t n) {
  if (n > remaining()) {
    throw DataError(what_ + ": unexpected end of data (wanted " +
                    std::to_string(n) + " bytes, " +
                    std::to_string(remaining()) + " left)");
  }
  std::string_view out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::string ByteReader::String() {
  const std::uint32_t n = U32();
  return std::string(Bytes(n));
}

void ByteReader::ExpectEnd() const {
  if (remaining() != 0) {
    throw DataError(what_ + ": " + std::to_string(remaining()) +
                    " trailing bytes");
  }
}

std::uint64_t Fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string HexDigest(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(digest));
  return buf;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace codeil
