#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rwt/model/resrnn.h"
#include "rwt/phantom/phantom.h"
#include "rwt/train/metrics.h"
#include "rwt/train/train.h"

namespace rwt::train {

inline constexpr int kFolds = 5;

struct FoldSplit {
  int fold = 0;
  std::vector<std::uint32_t> train_ids;
  std::vector<std::uint32_t> test_ids;
};

// Seeded shuffle of the ids, then 5 contiguous folds whose sizes differ by at
// most one. Throws std::invalid_argument for fewer than 5 subjects or
// duplicate ids.
std::vector<FoldSplit> FiveFold(const std::vector<std::uint32_t>& subject_ids,
                                std::uint64_t seed);
std::vector<FoldSplit> FiveFold(const std::vector<phantom::CineSequence>& dataset,
                                std::uint64_t seed);

struct CvOptions {
  int workers = 1;
  std::optional<double> spacing_mm;
  // (fold, iteration, loss); may be called from worker threads.
  std::function<void(int, int, double)> progress;
};

struct CvResult {
  MetricsReport report;
  // Per fold, in fold order.
  std::vector<std::vector<std::pair<int, double>>> loss_curves;
};

// Trains on four folds and evaluates on the held-out one, for every fold;
// per-subject errors of all folds are pooled before aggregation. Fold f
// trains with seed train_cfg.seed + f. Folds run on up to `workers` threads;
// results do not depend on the worker count.
CvResult RunCv(const std::vector<phantom::CineSequence>& dataset,
               const std::vector<FoldSplit>& folds, const model::ResRNNConfig& model_cfg,
               const TrainConfig& train_cfg, const CvOptions& options = {});

}  // namespace rwt::train
