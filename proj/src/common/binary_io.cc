#include "rwt/common/binary_io.h"

#include <zlib.h>

#include <bit>
#include <fstream>
#include <iterator>

#include "rwt/common/errors.h"

namespace rwt {

const char* FormatErrorName(FormatErrorCode code) {
  switch (code) {
    case FormatErrorCode::kIo: return "io error";
    case FormatErrorCode::kBadMagic: return "bad magic";
    case FormatErrorCode::kVersion: return "unsupported version";
    case FormatErrorCode::kTruncated: return "truncated file";
    case FormatErrorCode::kChecksum: return "checksum mismatch";
    case FormatErrorCode::kCorrupt: return "corrupt record";
  }
  return "format error";
}

namespace io {

void ByteWriter::U32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void ByteWriter::U64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void ByteWriter::F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::F64s(std::span<const double> values) {
  buf_.reserve(buf_.size() + 8 * values.size());
  for (double v : values) F64(v);
}

void ByteReader::Need(std::size_t n) const {
  if (n > remaining()) {
    throw FormatError(FormatErrorCode::kTruncated,
                      "needed " + std::to_string(n) + " bytes at offset " +
                          std::to_string(pos_) + ", " + std::to_string(remaining()) +
                          " left");
  }
}

std::uint32_t ByteReader::U32() {
  Need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
  }
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::U64() {
  Need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
  }
  pos_ += 8;
  return v;
}

double ByteReader::F64() { return std::bit_cast<double>(U64()); }

void ByteReader::F64s(std::span<double> out) {
  Need(8 * out.size());
  for (double& v : out) v = F64();
}

std::string_view ByteReader::Bytes(std::size_t n) {
  Need(n);
  auto view = bytes_.substr(pos_, n);
  pos_ += n;
  return view;
}

std::uint32_t Crc32(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
              static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrorCode::kIo, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void WriteFile(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatErrorCode::kIo, "short write to " + path.string());
}

}  // namespace io
}  // namespace rwt
