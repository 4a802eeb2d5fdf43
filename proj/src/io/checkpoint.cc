#include "rwt/io/checkpoint.h"

#include <charconv>
#include <sstream>
#include <stdexcept>

#include "rwt/common/binary_io.h"
#include "rwt/common/errors.h"

namespace rwt::io {
namespace {

constexpr std::string_view kMagic = "RWTC";
constexpr std::uint32_t kMaxRank = 8;

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t ParseSize(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument("config key '" + std::string(key) +
                                "' expects a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

int ParseInt(std::string_view key, std::string_view v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument("config key '" + std::string(key) + "' expects an integer, got '" +
                                std::string(v) + "'");
  }
  return out;
}

bool ParseBool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key '" + std::string(key) + "' expects true/false, got '" +
                              std::string(v) + "'");
}

// "channels,kernel,stride,pad"
model::ConvSpec ParseConv(std::string_view key, std::string_view v) {
  std::size_t fields[4];
  for (int i = 0; i < 4; ++i) {
    const auto comma = v.find(',');
    if ((comma == std::string_view::npos) != (i == 3)) {
      throw std::invalid_argument("config key '" + std::string(key) +
                                  "' expects channels,kernel,stride,pad");
    }
    fields[i] = ParseSize(key, Trim(v.substr(0, comma)));
    if (comma != std::string_view::npos) v.remove_prefix(comma + 1);
  }
  return {fields[0], fields[1], fields[2], fields[3]};
}

}  // namespace

std::string ModelConfigText(const model::ResRNNConfig& cfg) {
  std::ostringstream os;
  os << "variant=" << model::VariantName(cfg.variant) << '\n'
     << "frames=" << cfg.frames << '\n'
     << "regions=" << cfg.regions << '\n'
     << "input_size=" << cfg.input_size << '\n';
  for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
    const auto& c = cfg.conv[i];
    os << "conv" << i + 1 << '=' << c.channels << ',' << c.kernel << ',' << c.stride << ','
       << c.pad << '\n';
  }
  os << "embed_dim=" << cfg.embed_dim << '\n'
     << "temporal_hidden=" << cfg.temporal_hidden << '\n'
     << "spatial_hidden=" << cfg.spatial_hidden << '\n'
     << "temporal_depth=" << cfg.temporal_depth << '\n'
     << "spatial_depth=" << cfg.spatial_depth << '\n'
     << "spatial_rnn=" << (cfg.spatial_rnn ? "true" : "false") << '\n'
     << "freeze_trunk=" << (cfg.freeze_trunk ? "true" : "false") << '\n';
  return os.str();
}

bool SetModelConfigKey(model::ResRNNConfig& cfg, std::string_view key, std::string_view value) {
  value = Trim(value);
  if (key == "variant") {
    cfg.variant = model::ParseVariant(value);
  } else if (key == "frames") {
    cfg.frames = ParseSize(key, value);
  } else if (key == "regions") {
    cfg.regions = ParseSize(key, value);
  } else if (key == "input_size") {
    cfg.input_size = ParseSize(key, value);
  } else if (key == "conv1" || key == "conv2" || key == "conv3") {
    cfg.conv[static_cast<std::size_t>(key[4] - '1')] = ParseConv(key, value);
  } else if (key == "embed_dim") {
    cfg.embed_dim = ParseSize(key, value);
  } else if (key == "temporal_hidden") {
    cfg.temporal_hidden = ParseSize(key, value);
  } else if (key == "spatial_hidden") {
    cfg.spatial_hidden = ParseSize(key, value);
  } else if (key == "temporal_depth") {
    cfg.temporal_depth = ParseInt(key, value);
  } else if (key == "spatial_depth") {
    cfg.spatial_depth = ParseInt(key, value);
  } else if (key == "spatial_rnn") {
    cfg.spatial_rnn = ParseBool(key, value);
  } else if (key == "freeze_trunk") {
    cfg.freeze_trunk = ParseBool(key, value);
  } else {
    return false;
  }
  return true;
}

model::ResRNNConfig ParseModelConfigText(std::string_view text) {
  model::ResRNNConfig cfg;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = Trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line without '=': " + std::string(line));
    }
    const auto key = Trim(line.substr(0, eq));
    if (!SetModelConfigKey(cfg, key, line.substr(eq + 1))) {
      throw std::invalid_argument("unknown model config key '" + std::string(key) + "'");
    }
  }
  cfg.Validate();
  return cfg;
}

std::string EncodeCheckpoint(const Checkpoint& ckpt, std::uint32_t version) {
  ckpt.params.Validate(ckpt.config);
  ByteWriter body;
  const std::string text = ModelConfigText(ckpt.config);
  body.U32(static_cast<std::uint32_t>(text.size()));
  body.Bytes(text);
  const auto named = ckpt.params.Named();
  body.U32(static_cast<std::uint32_t>(named.size()));
  for (const auto& p : named) {
    body.U32(static_cast<std::uint32_t>(p.name.size()));
    body.Bytes(p.name);
    const auto& shape = p.tensor.shape();
    body.U32(static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) body.U32(static_cast<std::uint32_t>(d));
    body.F64s(p.tensor.data());
  }
  ByteWriter w;
  w.Bytes(kMagic);
  w.U32(version);
  w.U32(static_cast<std::uint32_t>(body.size()));
  w.Bytes(body.str());
  w.U32(Crc32(body.str()));
  return w.str();
}

Checkpoint DecodeCheckpoint(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kMagic.size() || r.Bytes(kMagic.size()) != kMagic) {
    throw FormatError(FormatErrorCode::kBadMagic, "not an RWTC checkpoint");
  }
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw FormatError(FormatErrorCode::kVersion,
                      "checkpoint version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  }
  const std::string_view body = r.Bytes(r.U32());
  if (Crc32(body) != r.U32()) throw FormatError(FormatErrorCode::kChecksum, "checkpoint body");
  if (r.remaining() != 0) throw FormatError(FormatErrorCode::kCorrupt, "trailing bytes");

  ByteReader b(body);
  Checkpoint ckpt;
  try {
    ckpt.config = ParseModelConfigText(b.Bytes(b.U32()));
  } catch (const std::invalid_argument& e) {
    throw FormatError(FormatErrorCode::kCorrupt, std::string("checkpoint config: ") + e.what());
  }
  ckpt.params = model::InitParams(ckpt.config, 0, nn::InitScheme::kZero);
  const auto named = ckpt.params.Named();
  if (b.U32() != named.size()) {
    throw FormatError(FormatErrorCode::kCorrupt, "tensor count does not match the config");
  }
  for (const auto& p : named) {
    const std::string_view name = b.Bytes(b.U32());
    if (name != p.name) {
      throw FormatError(FormatErrorCode::kCorrupt,
                        "expected tensor '" + p.name + "', found '" + std::string(name) + "'");
    }
    const std::uint32_t rank = b.U32();
    if (rank > kMaxRank) throw FormatError(FormatErrorCode::kCorrupt, "tensor rank too large");
    ad::Shape shape(rank);
    for (auto& d : shape) d = b.U32();
    if (shape != p.tensor.shape()) {
      throw FormatError(FormatErrorCode::kCorrupt,
                        "tensor '" + p.name + "' has shape " + ad::ShapeString(shape) +
                            ", config implies " + ad::ShapeString(p.tensor.shape()));
    }
    ad::Tensor t = p.tensor;
    b.F64s(t.data());
  }
  if (b.remaining() != 0) throw FormatError(FormatErrorCode::kCorrupt, "trailing tensor bytes");
  return ckpt;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  WriteFile(path, EncodeCheckpoint(ckpt));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  return DecodeCheckpoint(ReadFile(path));
}

}  // namespace rwt::io
