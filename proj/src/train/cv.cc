#include "rwt/train/cv.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

namespace rwt::train {

std::vector<FoldSplit> FiveFold(const std::vector<std::uint32_t>& subject_ids,
                                std::uint64_t seed) {
  if (subject_ids.size() < static_cast<std::size_t>(kFolds)) {
    throw std::invalid_argument("five-fold cross validation needs at least 5 subjects, got " +
                                std::to_string(subject_ids.size()));
  }
  std::vector<std::uint32_t> ids = subject_ids;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw std::invalid_argument("duplicate subject ids");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const std::size_t n = ids.size();
  std::vector<FoldSplit> folds(kFolds);
  std::size_t begin = 0;
  for (int f = 0; f < kFolds; ++f) {
    const std::size_t size = n / kFolds + (static_cast<std::size_t>(f) < n % kFolds ? 1 : 0);
    folds[f].fold = f;
    for (std::size_t k = 0; k < n; ++k) {
      (k >= begin && k < begin + size ? folds[f].test_ids : folds[f].train_ids).push_back(ids[k]);
    }
    begin += size;
  }
  return folds;
}

std::vector<FoldSplit> FiveFold(const std::vector<phantom::CineSequence>& dataset,
                                std::uint64_t seed) {
  std::vector<std::uint32_t> ids;
  ids.reserve(dataset.size());
  for (const auto& s : dataset) ids.push_back(s.subject_id);
  return FiveFold(ids, seed);
}

namespace {

std::vector<phantom::CineSequence> Select(
    const std::map<std::uint32_t, const phantom::CineSequence*>& by_id,
    const std::vector<std::uint32_t>& ids) {
  std::vector<phantom::CineSequence> out;
  out.reserve(ids.size());
  for (auto id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw std::invalid_argument("fold refers to unknown subject " + std::to_string(id));
    }
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace

CvResult RunCv(const std::vector<phantom::CineSequence>& dataset,
               const std::vector<FoldSplit>& folds, const model::ResRNNConfig& model_cfg,
               const TrainConfig& train_cfg, const CvOptions& options) {
  if (folds.empty()) throw std::invalid_argument("no folds");
  train_cfg.Validate();
  model_cfg.Validate();
  std::map<std::uint32_t, const phantom::CineSequence*> by_id;
  for (const auto& s : dataset) by_id[s.subject_id] = &s;

  struct FoldOutput {
    std::vector<SubjectErrors> errors;
    std::vector<std::pair<int, double>> loss_curve;
  };
  std::vector<FoldOutput> outputs(folds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (std::size_t k = next++; k < folds.size(); k = next++) {
      try {
        const auto train_set = Select(by_id, folds[k].train_ids);
        const auto test_set = Select(by_id, folds[k].test_ids);
        TrainConfig cfg = train_cfg;
        cfg.seed = train_cfg.seed + static_cast<std::uint64_t>(folds[k].fold);
        const int fold = folds[k].fold;
        ProgressFn progress;
        if (options.progress) {
          progress = [&options, fold](int iter, double loss) { options.progress(fold, iter, loss); };
        }
        TrainResult trained = Train(train_set, model_cfg, cfg, progress);
        outputs[k].errors = SubjectAbsErrors(trained.params, model_cfg, test_set);
        outputs[k].loss_curve = std::move(trained.loss_curve);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = folds.size();
      }
    }
  };

  const std::size_t n_workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.workers, 1)), 1,
                              folds.size());
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  CvResult result;
  std::vector<SubjectErrors> pooled;
  for (auto& out : outputs) {
    for (auto& e : out.errors) pooled.push_back(std::move(e));
    result.loss_curves.push_back(std::move(out.loss_curve));
  }
  std::sort(pooled.begin(), pooled.end(),
            [](const SubjectErrors& a, const SubjectErrors& b) { return a.subject_id < b.subject_id; });
  result.report = Aggregate(std::move(pooled), options.spacing_mm);
  return result;
}

}  // namespace rwt::train
