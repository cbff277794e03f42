#ifndef CODEIL_BINARY_IO_H_
#define CODEIL_BINARY_IO_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace codeil {

// Little-endian writer for the versioned file containers.
class ByteWriter {
 public:
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F64(double v);
  void Bytes(std::string_view bytes);
  // Length-prefixed (u32) string.
  void String(std::string_view s);

  const std::string& data() const { return data_; }
  // Appends the FNV-1a digest of everything written so far.
  std::string Finish() const;

 private:
  std::string data_;
};

// Bounds-checked reader; every overrun throws a DataError naming `what`.
class ByteReader {
 public:
  // Verifies and strips the trailing checksum written by ByteWriter::Finish.
  static ByteReader Open(std::string_view bytes, const std::string& what);

  std::uint32_t U32();
  std::uint64_t U64();
  double F64();
  std::string_view Bytes(std::size_t n);
  std::string String();

  std::size_t remaining() const { return data_.size() - pos_; }
  // Throws unless all payload bytes were consumed.
  void ExpectEnd() const;

 private:
  ByteReader(std::string_view data, std::string what)
      : data_(data), what_(std::move(what)) {}

  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::uint64_t Fnv1a(std::string_view bytes);
std::string HexDigest(std::uint64_t digest);

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view bytes);

}  // namespace codeil

#endif  // CODEIL_BINARY_IO_H_
