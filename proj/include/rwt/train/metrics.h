#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rwt/model/resrnn.h"
#include "rwt/phantom/phantom.h"

namespace rwt::train {

// Absolute errors of one subject, [frames x regions] row-major, normalized units.
struct SubjectErrors {
  std::uint32_t subject_id = 0;
  std::size_t frames = 0;
  std::size_t regions = 0;
  std::vector<double> abs_error;

  double At(std::size_t f, std::size_t l) const { return abs_error[f * regions + l]; }
};

struct RegionStat {
  std::string name;  // "WT-IS" ... "WT-AS", "Average"
  double mean = 0.0;
  double std = 0.0;
};

// Aggregates in normalized units; see Pixels()/Millimetres() for conversion.
struct MetricsReport {
  std::size_t frames = 0;
  std::size_t regions = 0;
  // One row per region, then "Average": mean and sample std over subjects of
  // per-subject mean absolute errors.
  std::vector<RegionStat> rows;
  // [frames x regions]: mean over subjects of the error at (frame, region).
  std::vector<double> frame_region;
  // Mean over subjects and regions per frame.
  std::vector<double> frame_curve;
  std::vector<SubjectErrors> subjects;
  std::optional<double> spacing_mm;

  double MeanMae() const { return rows.back().mean; }
  // Frame curve restricted to one region.
  std::vector<double> RegionCurve(std::size_t region) const;
};

inline constexpr double kPixelsPerUnit = phantom::kLabelScale;

// Throws std::invalid_argument on an empty list or inconsistent sizes.
MetricsReport Aggregate(std::vector<SubjectErrors> subjects,
                        std::optional<double> spacing_mm = std::nullopt);

// Center-crop inference over labelled sequences.
std::vector<SubjectErrors> SubjectAbsErrors(const model::ResRNNParams& params,
                                            const model::ResRNNConfig& cfg,
                                            const std::vector<phantom::CineSequence>& seqs);

MetricsReport Evaluate(const model::ResRNNParams& params, const model::ResRNNConfig& cfg,
                       const std::vector<phantom::CineSequence>& seqs,
                       std::optional<double> spacing_mm = std::nullopt);

// CSV: region,mean_norm,std_norm,mean_px,std_px[,mean_mm,std_mm]
void WriteRegionTable(std::ostream& os, const MetricsReport& report);
// CSV: frame,mean_norm,mean_px[,mean_mm],<one column per region, normalized>
void WriteFrameCurve(std::ostream& os, const MetricsReport& report);
// CSV: iteration,loss
void WriteLossCurve(std::ostream& os, const std::vector<std::pair<int, double>>& curve);

// Ablation table: rows WT-IS..WT-AS and Average; one "mean ± std" column per
// report, in pixels (or mm when every report carries a spacing).
void WriteComparisonTable(std::ostream& os, const std::vector<std::string>& titles,
                          const std::vector<MetricsReport>& reports);

}  // namespace rwt::train
