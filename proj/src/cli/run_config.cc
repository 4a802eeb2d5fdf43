#include "rwt/cli/run_config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "rwt/io/checkpoint.h"

namespace rwt::cli {
namespace {

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::string Where(std::string_view section, std::string_view key) {
  return "[" + std::string(section) + "] " + std::string(key);
}

template <typename T>
T ParseNumber(std::string_view section, std::string_view key, std::string_view v) {
  v = Trim(v);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(Where(section, key) + ": cannot parse '" + std::string(v) + "'");
  }
  return out;
}

phantom::Range ParseRange(std::string_view section, std::string_view key, std::string_view v) {
  const auto comma = v.find(',');
  if (comma == std::string_view::npos) {
    throw ConfigError(Where(section, key) + ": expected 'lo,hi', got '" + std::string(v) + "'");
  }
  return {ParseNumber<double>(section, key, v.substr(0, comma)),
          ParseNumber<double>(section, key, v.substr(comma + 1))};
}

std::optional<double> ParseOptional(std::string_view section, std::string_view key,
                                    std::string_view v) {
  if (Trim(v) == "none") return std::nullopt;
  return ParseNumber<double>(section, key, v);
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string RangeText(const phantom::Range& r) { return Num(r.lo) + "," + Num(r.hi); }

struct RangeKey {
  const char* name;
  phantom::Range phantom::PhantomRanges::*member;
};

constexpr RangeKey kRangeKeys[] = {
    {"inner_radius", &phantom::PhantomRanges::inner_radius},
    {"base_thickness", &phantom::PhantomRanges::base_thickness},
    {"amplitude", &phantom::PhantomRanges::amplitude},
    {"noise_sigma", &phantom::PhantomRanges::noise_sigma},
    {"phase", &phantom::PhantomRanges::phase},
    {"contraction", &phantom::PhantomRanges::contraction},
    {"center_jitter", &phantom::PhantomRanges::center_jitter},
};

std::vector<std::string> SplitList(std::string_view v) {
  std::vector<std::string> out;
  while (true) {
    const auto comma = v.find(',');
    const auto item = Trim(v.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

RunConfig::RunConfig() {
  workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  for (auto v : model::kAllVariants) variants.emplace_back(model::VariantName(v));
}

void ApplyVariantName(model::ResRNNConfig& cfg, std::string_view name) {
  if (name == "trnn-plain" || name == "trnn-circle") {
    cfg.variant = name == "trnn-plain" ? model::Variant::kRnnPlain : model::Variant::kRnnCircle;
    cfg.spatial_rnn = false;
    return;
  }
  try {
    cfg.variant = model::ParseVariant(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(e.what()) + "; trnn-plain and trnn-circle are also accepted");
  }
  cfg.spatial_rnn = true;
}

std::string ResolvedVariantName(const model::ResRNNConfig& cfg) {
  if (!cfg.spatial_rnn && model::UsesRnnPath(cfg.variant) && !model::UsesCnnPath(cfg.variant)) {
    return model::IsCircle(cfg.variant) ? "trnn-circle" : "trnn-plain";
  }
  return std::string(model::VariantName(cfg.variant));
}

void RunConfig::Set(std::string_view section, std::string_view key, std::string_view value) {
  value = Trim(value);
  if (section == "phantom") {
    if (key == "subjects") {
      subjects = ParseNumber<std::size_t>(section, key, value);
    } else if (key == "seed") {
      data_seed = ParseNumber<std::uint64_t>(section, key, value);
    } else if (key == "image_size") {
      ranges.image_size = ParseNumber<int>(section, key, value);
    } else if (key == "frames") {
      ranges.frames = ParseNumber<int>(section, key, value);
    } else {
      for (const auto& rk : kRangeKeys) {
        if (key == rk.name) {
          ranges.*rk.member = ParseRange(section, key, value);
          return;
        }
      }
      throw ConfigError("unknown key " + Where(section, key));
    }
  } else if (section == "model") {
    try {
      if (key == "variant") {
        ApplyVariantName(model, value);
      } else if (!io::SetModelConfigKey(model, key, value)) {
        throw ConfigError("unknown key " + Where(section, key));
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(Where(section, key) + ": " + e.what());
    }
  } else if (section == "train") {
    if (key == "base_lr") {
      train.base_lr = ParseNumber<double>(section, key, value);
    } else if (key == "weight_decay") {
      train.weight_decay = ParseNumber<double>(section, key, value);
    } else if (key == "momentum") {
      train.momentum = ParseNumber<double>(section, key, value);
    } else if (key == "gamma") {
      train.gamma = ParseNumber<double>(section, key, value);
    } else if (key == "step_size") {
      train.step_size = ParseNumber<int>(section, key, value);
    } else if (key == "max_iters") {
      train.max_iters = ParseNumber<int>(section, key, value);
    } else if (key == "batch_subjects") {
      train.batch_subjects = ParseNumber<int>(section, key, value);
    } else if (key == "grad_clip") {
      train.grad_clip = ParseOptional(section, key, value);
    } else if (key == "seed") {
      train.seed = ParseNumber<std::uint64_t>(section, key, value);
    } else if (key == "log_every") {
      train.log_every = ParseNumber<int>(section, key, value);
    } else if (key == "init") {
      if (value == "uniform") {
        train.init = nn::InitScheme::kUniformFanIn;
      } else if (value == "zero") {
        train.init = nn::InitScheme::kZero;
      } else {
        throw ConfigError(Where(section, key) + ": expected 'uniform' or 'zero'");
      }
    } else {
      throw ConfigError("unknown key " + Where(section, key));
    }
  } else if (section == "run") {
    if (key == "data") {
      data = value;
    } else if (key == "out") {
      out = value;
    } else if (key == "checkpoint") {
      checkpoint = value;
    } else if (key == "workers") {
      workers = ParseNumber<int>(section, key, value);
    } else if (key == "spacing_mm") {
      spacing_mm = ParseOptional(section, key, value);
    } else if (key == "fold_seed") {
      fold_seed = ParseNumber<std::uint64_t>(section, key, value);
    } else if (key == "variants") {
      variants = SplitList(value);
    } else if (key == "gradcheck_tol") {
      gradcheck_tol = ParseNumber<double>(section, key, value);
    } else {
      throw ConfigError("unknown key " + Where(section, key));
    }
  } else {
    throw ConfigError("unknown section [" + std::string(section) + "]");
  }
}

void RunConfig::LoadIni(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError("config " + path.string() + ": key '" + section +
                        "' outside of a section");
    }
    for (const auto& [key, value] : body) Set(section, key, value.data());
  }
}

std::string RunConfig::ToIni() const {
  std::ostringstream os;
  os << "[phantom]\n"
     << "subjects=" << subjects << '\n'
     << "seed=" << data_seed << '\n'
     << "image_size=" << ranges.image_size << '\n'
     << "frames=" << ranges.frames << '\n';
  for (const auto& rk : kRangeKeys) os << rk.name << '=' << RangeText(ranges.*rk.member) << '\n';

  os << "\n[model]\n";
  std::istringstream model_text(io::ModelConfigText(model));
  for (std::string line; std::getline(model_text, line);) {
    if (line.rfind("variant=", 0) == 0) line = "variant=" + ResolvedVariantName(model);
    os << line << '\n';
  }

  os << "\n[train]\n"
     << "base_lr=" << Num(train.base_lr) << '\n'
     << "weight_decay=" << Num(train.weight_decay) << '\n'
     << "momentum=" << Num(train.momentum) << '\n'
     << "gamma=" << Num(train.gamma) << '\n'
     << "step_size=" << train.step_size << '\n'
     << "max_iters=" << train.max_iters << '\n'
     << "batch_subjects=" << train.batch_subjects << '\n'
     << "grad_clip=" << (train.grad_clip ? Num(*train.grad_clip) : "none") << '\n'
     << "seed=" << train.seed << '\n'
     << "log_every=" << train.log_every << '\n'
     << "init=" << (train.init == nn::InitScheme::kZero ? "zero" : "uniform") << '\n';

  os << "\n[run]\n"
     << "data=" << data << '\n'
     << "out=" << out << '\n'
     << "checkpoint=" << checkpoint << '\n'
     << "workers=" << workers << '\n'
     << "spacing_mm=" << (spacing_mm ? Num(*spacing_mm) : "none") << '\n'
     << "fold_seed=" << fold_seed << '\n'
     << "variants=";
  for (std::size_t i = 0; i < variants.size(); ++i) os << (i ? "," : "") << variants[i];
  os << '\n' << "gradcheck_tol=" << Num(gradcheck_tol) << '\n';
  return os.str();
}

}  // namespace rwt::cli
