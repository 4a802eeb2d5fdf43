#include "rwt/train/metrics.h"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "rwt/ad/tape.h"
#include "rwt/train/train.h"

namespace rwt::train {
namespace {

void MeanStd(const std::vector<double>& xs, double* mean, double* std) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  *mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) {
    *std = 0.0;
    return;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - *mean) * (x - *mean);
  *std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::string Fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string RegionLabel(std::size_t l, std::size_t regions) {
  if (regions == phantom::kRegions) return "WT-" + std::string(phantom::kRegionNames[l]);
  return "WT-" + std::to_string(l + 1);
}

}  // namespace

std::vector<double> MetricsReport::RegionCurve(std::size_t region) const {
  if (region >= regions) throw std::out_of_range("region index out of range");
  std::vector<double> out(frames);
  for (std::size_t f = 0; f < frames; ++f) out[f] = frame_region[f * regions + region];
  return out;
}

MetricsReport Aggregate(std::vector<SubjectErrors> subjects, std::optional<double> spacing_mm) {
  if (subjects.empty()) throw std::invalid_argument("no subjects to aggregate");
  if (spacing_mm && !(*spacing_mm > 0.0)) {
    throw std::invalid_argument("pixel spacing must be positive");
  }
  MetricsReport r;
  r.frames = subjects[0].frames;
  r.regions = subjects[0].regions;
  r.spacing_mm = spacing_mm;
  const std::size_t fl = r.frames * r.regions;
  for (const auto& s : subjects) {
    if (s.frames != r.frames || s.regions != r.regions || s.abs_error.size() != fl || fl == 0) {
      throw std::invalid_argument("subject " + std::to_string(s.subject_id) +
                                  " has an inconsistent error matrix");
    }
  }
  const double n = static_cast<double>(subjects.size());
  std::vector<std::vector<double>> per_region(r.regions);
  std::vector<double> overall;
  r.frame_region.assign(fl, 0.0);
  for (const auto& s : subjects) {
    double all = 0.0;
    for (std::size_t l = 0; l < r.regions; ++l) {
      double acc = 0.0;
      for (std::size_t f = 0; f < r.frames; ++f) acc += s.At(f, l);
      per_region[l].push_back(acc / static_cast<double>(r.frames));
      all += acc;
    }
    overall.push_back(all / static_cast<double>(fl));
    for (std::size_t k = 0; k < fl; ++k) r.frame_region[k] += s.abs_error[k] / n;
  }
  for (std::size_t l = 0; l < r.regions; ++l) {
    RegionStat row{RegionLabel(l, r.regions)};
    MeanStd(per_region[l], &row.mean, &row.std);
    r.rows.push_back(row);
  }
  RegionStat avg{"Average"};
  MeanStd(overall, &avg.mean, &avg.std);
  r.rows.push_back(avg);
  r.frame_curve.assign(r.frames, 0.0);
  for (std::size_t f = 0; f < r.frames; ++f) {
    for (std::size_t l = 0; l < r.regions; ++l) r.frame_curve[f] += r.frame_region[f * r.regions + l];
    r.frame_curve[f] /= static_cast<double>(r.regions);
  }
  r.subjects = std::move(subjects);
  return r;
}

std::vector<SubjectErrors> SubjectAbsErrors(const model::ResRNNParams& params,
                                            const model::ResRNNConfig& cfg,
                                            const std::vector<phantom::CineSequence>& seqs) {
  ad::NoGradScope no_grad;
  std::vector<SubjectErrors> out;
  out.reserve(seqs.size());
  for (const auto& seq : seqs) {
    const Tensor target = LabelTensor(seq);
    const Tensor pred =
        model::Forward(params, cfg, CroppedInput(seq, phantom::CropMode::kCenter, nullptr));
    if (pred.shape() != target.shape()) {
      throw std::invalid_argument("prediction " + ad::ShapeString(pred.shape()) +
                                  " does not match labels " + ad::ShapeString(target.shape()));
    }
    SubjectErrors e{seq.subject_id, target.dim(0), target.dim(1), {}};
    e.abs_error.resize(target.size());
    for (std::size_t k = 0; k < target.size(); ++k) {
      e.abs_error[k] = std::abs(pred.at(k) - target.at(k));
    }
    out.push_back(std::move(e));
  }
  return out;
}

MetricsReport Evaluate(const model::ResRNNParams& params, const model::ResRNNConfig& cfg,
                       const std::vector<phantom::CineSequence>& seqs,
                       std::optional<double> spacing_mm) {
  return Aggregate(SubjectAbsErrors(params, cfg, seqs), spacing_mm);
}

void WriteRegionTable(std::ostream& os, const MetricsReport& report) {
  const bool mm = report.spacing_mm.has_value();
  os << "region,mean_norm,std_norm,mean_px,std_px" << (mm ? ",mean_mm,std_mm" : "") << '\n';
  for (const auto& row : report.rows) {
    os << row.name << ',' << Fmt(row.mean) << ',' << Fmt(row.std) << ','
       << Fmt(row.mean * kPixelsPerUnit) << ',' << Fmt(row.std * kPixelsPerUnit);
    if (mm) {
      const double k = kPixelsPerUnit * *report.spacing_mm;
      os << ',' << Fmt(row.mean * k) << ',' << Fmt(row.std * k);
    }
    os << '\n';
  }
}

void WriteFrameCurve(std::ostream& os, const MetricsReport& report) {
  const bool mm = report.spacing_mm.has_value();
  os << "frame,mean_norm,mean_px" << (mm ? ",mean_mm" : "");
  for (std::size_t l = 0; l < report.regions; ++l) os << ',' << RegionLabel(l, report.regions);
  os << '\n';
  for (std::size_t f = 0; f < report.frames; ++f) {
    const double v = report.frame_curve[f];
    os << f + 1 << ',' << Fmt(v) << ',' << Fmt(v * kPixelsPerUnit);
    if (mm) os << ',' << Fmt(v * kPixelsPerUnit * *report.spacing_mm);
    for (std::size_t l = 0; l < report.regions; ++l) {
      os << ',' << Fmt(report.frame_region[f * report.regions + l]);
    }
    os << '\n';
  }
}

void WriteLossCurve(std::ostream& os, const std::vector<std::pair<int, double>>& curve) {
  os << "iteration,loss\n";
  char buf[64];
  for (const auto& [iter, loss] : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g\n", iter, loss);
    os << buf;
  }
}

void WriteComparisonTable(std::ostream& os, const std::vector<std::string>& titles,
                          const std::vector<MetricsReport>& reports) {
  if (titles.size() != reports.size() || reports.empty()) {
    throw std::invalid_argument("comparison table needs one title per report");
  }
  bool mm = true;
  for (const auto& r : reports) {
    mm = mm && r.spacing_mm.has_value();
    if (r.rows.size() != reports[0].rows.size()) {
      throw std::invalid_argument("reports have different region counts");
    }
  }
  os << (mm ? "region (mm)" : "region (px)");
  for (const auto& t : titles) os << ',' << t;
  os << '\n';
  char buf[64];
  for (std::size_t k = 0; k < reports[0].rows.size(); ++k) {
    os << reports[0].rows[k].name;
    for (const auto& r : reports) {
      const double scale = kPixelsPerUnit * (mm ? *r.spacing_mm : 1.0);
      std::snprintf(buf, sizeof(buf), ",%.4f ± %.4f", r.rows[k].mean * scale,
                    r.rows[k].std * scale);
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace rwt::train
