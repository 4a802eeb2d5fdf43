#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

// Little-endian primitives for the dataset and checkpoint containers.
namespace rwt::io {

class ByteWriter {
 public:
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F64(double v);
  void F64s(std::span<const double> values);
  void Bytes(std::string_view bytes) { buf_.append(bytes); }

  const std::string& str() const { return buf_; }
  std::size_t size() const { return buf_.size(); }

 private:
  std::string buf_;
};

// Throws FormatError(kTruncated) when reading past the end.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t U32();
  std::uint64_t U64();
  double F64();
  void F64s(std::span<double> out);
  std::string_view Bytes(std::size_t n);

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void Need(std::size_t n) const;
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t Crc32(std::string_view bytes);

// Whole-file helpers; failures raise FormatError(kIo).
std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view bytes);

}  // namespace rwt::io
