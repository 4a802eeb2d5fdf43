#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rwt/model/resrnn.h"
#include "rwt/phantom/phantom.h"
#include "rwt/train/train.h"

namespace rwt::cli {

// Everything a command needs, resolved from defaults, an INI file and flags.
//
// INI sections and keys:
//   [phantom]  subjects, seed, image_size, frames, and ranges written as
//              "lo,hi": inner_radius, base_thickness, amplitude, noise_sigma,
//              phase, contraction, center_jitter
//   [model]    variant, frames, regions, input_size, conv1..conv3
//              ("channels,kernel,stride,pad"), embed_dim, temporal_hidden,
//              spatial_hidden, temporal_depth, spatial_depth, spatial_rnn,
//              freeze_trunk
//   [train]    base_lr, weight_decay, momentum, gamma, step_size, max_iters,
//              batch_subjects, grad_clip ("none" or a norm), seed, log_every,
//              init ("uniform" or "zero")
//   [run]      data, out, checkpoint, workers, spacing_mm ("none" or mm),
//              fold_seed, variants (comma list for ablate), gradcheck_tol
struct RunConfig {
  std::size_t subjects = 24;
  std::uint64_t data_seed = 1;
  phantom::PhantomRanges ranges;
  model::ResRNNConfig model;
  train::TrainConfig train;
  std::string data;
  std::string out;
  std::string checkpoint;
  int workers = 1;
  std::optional<double> spacing_mm;
  std::uint64_t fold_seed = 1;
  std::vector<std::string> variants;
  double gradcheck_tol = 1e-4;

  RunConfig();

  // Throws ConfigError for an unknown section/key or an unparsable value.
  void Set(std::string_view section, std::string_view key, std::string_view value);
  void LoadIni(const std::filesystem::path& path);
  // Resolved configuration in the same INI layout.
  std::string ToIni() const;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Variant names accepted by --variant: the five model variants plus
// "trnn-plain" and "trnn-circle" (temporal RNN only, no spatial runner).
void ApplyVariantName(model::ResRNNConfig& cfg, std::string_view name);
std::string ResolvedVariantName(const model::ResRNNConfig& cfg);

}  // namespace rwt::cli
