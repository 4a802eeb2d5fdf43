#include "rwt/io/dataset_io.h"

#include <cstdio>
#include <sstream>

#include "rwt/common/binary_io.h"
#include "rwt/common/errors.h"

namespace rwt::io {
namespace {

constexpr std::string_view kMagic = "RWTD";
// Caps keep a corrupt header from requesting absurd allocations.
constexpr std::uint32_t kMaxDim = 1u << 16;

void EncodeSpec(const phantom::PhantomSpec& s, ByteWriter& w) {
  w.U32(static_cast<std::uint32_t>(s.image_size));
  w.U32(static_cast<std::uint32_t>(s.frames));
  w.F64(s.center_x);
  w.F64(s.center_y);
  w.F64(s.inner_radius_base);
  w.F64s(s.base_thickness);
  w.F64s(s.amplitude);
  w.F64(s.phase);
  w.F64(s.contraction);
  w.F64(s.blood_level);
  w.F64(s.myocardium_level);
  w.F64(s.background_level);
  w.F64(s.noise_sigma);
  w.U64(s.seed);
}

phantom::PhantomSpec DecodeSpec(ByteReader& r) {
  phantom::PhantomSpec s;
  s.image_size = static_cast<int>(r.U32());
  s.frames = static_cast<int>(r.U32());
  s.center_x = r.F64();
  s.center_y = r.F64();
  s.inner_radius_base = r.F64();
  r.F64s(s.base_thickness);
  r.F64s(s.amplitude);
  s.phase = r.F64();
  s.contraction = r.F64();
  s.blood_level = r.F64();
  s.myocardium_level = r.F64();
  s.background_level = r.F64();
  s.noise_sigma = r.F64();
  s.seed = r.U64();
  return s;
}

std::uint32_t CheckedDim(ByteReader& r, const char* what) {
  const std::uint32_t v = r.U32();
  if (v == 0 || v > kMaxDim) {
    throw FormatError(FormatErrorCode::kCorrupt,
                      std::string(what) + " out of range: " + std::to_string(v));
  }
  return v;
}

phantom::CineSequence DecodeSubject(std::string_view payload) {
  ByteReader r(payload);
  phantom::CineSequence seq;
  seq.subject_id = r.U32();
  seq.spec = DecodeSpec(r);
  seq.frames = static_cast<int>(CheckedDim(r, "frame count"));
  seq.height = static_cast<int>(CheckedDim(r, "image height"));
  seq.width = static_cast<int>(CheckedDim(r, "image width"));
  const std::size_t n_pixels =
      static_cast<std::size_t>(seq.frames) * seq.height * seq.width;
  if (n_pixels * 8 > r.remaining()) {
    throw FormatError(FormatErrorCode::kCorrupt, "frame payload larger than the subject block");
  }
  seq.pixels.resize(n_pixels);
  r.F64s(seq.pixels);
  const std::uint32_t regions = CheckedDim(r, "region count");
  if (regions != phantom::kRegions) {
    throw FormatError(FormatErrorCode::kCorrupt,
                      "expected " + std::to_string(phantom::kRegions) + " regions, got " +
                          std::to_string(regions));
  }
  seq.labels.resize(static_cast<std::size_t>(seq.frames) * regions);
  r.F64s(seq.labels);
  if (r.remaining() != 0) {
    throw FormatError(FormatErrorCode::kCorrupt, "trailing bytes in subject block");
  }
  return seq;
}

}  // namespace

std::string EncodeDataset(const std::vector<phantom::CineSequence>& subjects,
                          std::uint32_t version) {
  ByteWriter w;
  w.Bytes(kMagic);
  w.U32(version);
  w.U32(static_cast<std::uint32_t>(subjects.size()));
  for (const auto& seq : subjects) {
    const std::size_t n_pixels = static_cast<std::size_t>(seq.frames) * seq.height * seq.width;
    if (seq.pixels.size() != n_pixels ||
        seq.labels.size() != static_cast<std::size_t>(seq.frames) * phantom::kRegions) {
      throw std::invalid_argument("subject " + std::to_string(seq.subject_id) +
                                  " has inconsistent frame or label sizes");
    }
    ByteWriter p;
    p.U32(seq.subject_id);
    EncodeSpec(seq.spec, p);
    p.U32(static_cast<std::uint32_t>(seq.frames));
    p.U32(static_cast<std::uint32_t>(seq.height));
    p.U32(static_cast<std::uint32_t>(seq.width));
    p.F64s(seq.pixels);
    p.U32(static_cast<std::uint32_t>(phantom::kRegions));
    p.F64s(seq.labels);
    w.U32(static_cast<std::uint32_t>(p.size()));
    w.Bytes(p.str());
    w.U32(Crc32(p.str()));
  }
  return w.str();
}

std::vector<phantom::CineSequence> DecodeDataset(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kMagic.size() || r.Bytes(kMagic.size()) != kMagic) {
    throw FormatError(FormatErrorCode::kBadMagic, "not an RWTD dataset");
  }
  const std::uint32_t version = r.U32();
  if (version != kDatasetVersion) {
    throw FormatError(FormatErrorCode::kVersion,
                      "dataset version " + std::to_string(version) + ", expected " +
                          std::to_string(kDatasetVersion));
  }
  const std::uint32_t count = r.U32();
  std::vector<phantom::CineSequence> out;
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::uint32_t length = r.U32();
    const std::string_view payload = r.Bytes(length);
    const std::uint32_t stored = r.U32();
    if (Crc32(payload) != stored) {
      throw FormatError(FormatErrorCode::kChecksum,
                        "subject block " + std::to_string(s) + " fails CRC-32");
    }
    out.push_back(DecodeSubject(payload));
  }
  if (r.remaining() != 0) {
    throw FormatError(FormatErrorCode::kCorrupt, "trailing bytes after the last subject");
  }
  return out;
}

void WriteDataset(const std::filesystem::path& path,
                  const std::vector<phantom::CineSequence>& subjects) {
  WriteFile(path, EncodeDataset(subjects));
}

std::vector<phantom::CineSequence> ReadDataset(const std::filesystem::path& path) {
  return DecodeDataset(ReadFile(path));
}

std::string DatasetManifest(const std::vector<phantom::CineSequence>& subjects) {
  std::ostringstream os;
  os << "# id seed frames size inner_radius contraction phase noise base[IS,I,IL,AL,A,AS] "
        "amplitude[IS,I,IL,AL,A,AS]\n";
  char buf[64];
  for (const auto& seq : subjects) {
    const auto& s = seq.spec;
    os << seq.subject_id << ' ' << s.seed << ' ' << seq.frames << ' ' << seq.width << 'x'
       << seq.height;
    for (double v : {s.inner_radius_base, s.contraction, s.phase, s.noise_sigma}) {
      std::snprintf(buf, sizeof(buf), " %.4f", v);
      os << buf;
    }
    for (const auto* arr : {&s.base_thickness, &s.amplitude}) {
      os << ' ';
      for (std::size_t l = 0; l < arr->size(); ++l) {
        std::snprintf(buf, sizeof(buf), "%s%.4f", l ? "," : "", (*arr)[l]);
        os << buf;
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace rwt::io
