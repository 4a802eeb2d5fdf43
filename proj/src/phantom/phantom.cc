#include "rwt/phantom/phantom.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rwt::phantom {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kSuperSample = 8;

double Smoothstep(double x) { return x * x * (3.0 - 2.0 * x); }

double Draw(const Range& r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return r.lo + (r.hi - r.lo) * unit(rng);
}

void CheckRange(const Range& r, const char* name, double min_lo) {
  if (!(r.lo <= r.hi)) {
    throw std::invalid_argument(std::string("phantom range '") + name + "' is empty");
  }
  if (r.lo < min_lo) {
    throw std::invalid_argument(std::string("phantom range '") + name + "' starts below " +
                                std::to_string(min_lo));
  }
}

// Per-frame geometry shared by all pixels of one rendering.
struct FrameGeometry {
  const PhantomSpec* spec;
  double frame;
  double inner;
  double ClassLevel(double x, double y) const {
    const double dx = x - spec->center_x;
    const double dy = spec->center_y - y;  // y axis up
    const double r = std::hypot(dx, dy);
    if (r < inner) return spec->blood_level;
    const double deg = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
    if (r < inner + spec->ThicknessAtAngle(deg, frame)) return spec->myocardium_level;
    return spec->background_level;
  }
};

}  // namespace

double RegionMidpointDegrees(std::size_t region) {
  return std::fmod(210.0 + 60.0 * static_cast<double>(region), 360.0);
}

void PhantomSpec::Validate() const {
  if (image_size < 8) throw std::invalid_argument("phantom image_size must be >= 8");
  if (frames < 1) throw std::invalid_argument("phantom frames must be >= 1");
  if (!(inner_radius_base > 0.0)) {
    throw std::invalid_argument("phantom inner radius must be positive");
  }
  if (contraction < 0.0 || !(contraction < inner_radius_base)) {
    throw std::invalid_argument("phantom contraction must lie in [0, inner radius)");
  }
  if (noise_sigma < 0.0) throw std::invalid_argument("phantom noise sigma must be >= 0");
  const double limit = image_size / 2.0 - 2.0;
  for (std::size_t l = 0; l < kRegions; ++l) {
    const double w0 = base_thickness[l];
    const double a = amplitude[l];
    if (!(w0 > 0.0) || !(w0 + std::min(a, 0.0) > 0.0)) {
      throw std::invalid_argument("phantom thickness trajectory of region " +
                                  std::string(kRegionNames[l]) + " is not positive");
    }
    if (!(w0 + std::abs(a) + inner_radius_base + contraction < limit)) {
      throw std::invalid_argument("phantom annulus of region " + std::string(kRegionNames[l]) +
                                  " does not fit inside the image");
    }
  }
  const double reach = inner_radius_base + contraction +
                       *std::max_element(base_thickness.begin(), base_thickness.end()) +
                       std::abs(*std::max_element(amplitude.begin(), amplitude.end()));
  if (center_x - reach < 1.0 || center_y - reach < 1.0 ||
      center_x + reach > image_size - 2.0 || center_y + reach > image_size - 2.0) {
    throw std::invalid_argument("phantom centre places the annulus outside the image");
  }
}

double PhantomSpec::Activation(double frame) const {
  return 0.5 * (1.0 - std::cos(kTwoPi * (frame - 1.0) / frames + kTwoPi * phase));
}

double PhantomSpec::Thickness(std::size_t region, double frame) const {
  return base_thickness.at(region) + amplitude.at(region) * Activation(frame);
}

double PhantomSpec::InnerRadius(double frame) const {
  return inner_radius_base - contraction * Activation(frame);
}

double PhantomSpec::ThicknessAtAngle(double degrees, double frame) const {
  // Offset from the clockwise border of the IS sector (180 degrees).
  double d = std::fmod(degrees - 180.0, 360.0);
  if (d < 0.0) d += 360.0;
  const std::size_t sector = std::min<std::size_t>(static_cast<std::size_t>(d / 60.0), 5);
  const double u = d - 60.0 * static_cast<double>(sector);
  const double here = Thickness(sector, frame);
  if (u < kBlendDegrees) {
    const double prev = Thickness((sector + kRegions - 1) % kRegions, frame);
    const double x = Smoothstep((u + kBlendDegrees) / (2.0 * kBlendDegrees));
    return (1.0 - x) * prev + x * here;
  }
  if (u > 60.0 - kBlendDegrees) {
    const double next = Thickness((sector + 1) % kRegions, frame);
    const double x = Smoothstep((u - (60.0 - kBlendDegrees)) / (2.0 * kBlendDegrees));
    return (1.0 - x) * here + x * next;
  }
  return here;
}

std::vector<double> RenderFrame(const PhantomSpec& spec, int frame) {
  const int n = spec.image_size;
  const double f = frame + 1.0;
  const FrameGeometry geo{&spec, f, spec.InnerRadius(f)};
  std::vector<double> image(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // Pixel (i, j) covers [j - 1/2, j + 1/2] x [i - 1/2, i + 1/2].
      const double probe[9][2] = {{-0.5, -0.5}, {0.0, -0.5}, {0.5, -0.5},
                                  {-0.5, 0.0},  {0.0, 0.0},  {0.5, 0.0},
                                  {-0.5, 0.5},  {0.0, 0.5},  {0.5, 0.5}};
      const double first = geo.ClassLevel(j + probe[0][0], i + probe[0][1]);
      bool uniform = true;
      for (int k = 1; k < 9 && uniform; ++k) {
        uniform = geo.ClassLevel(j + probe[k][0], i + probe[k][1]) == first;
      }
      double value = first;
      if (!uniform) {
        double acc = 0.0;
        for (int sy = 0; sy < kSuperSample; ++sy) {
          for (int sx = 0; sx < kSuperSample; ++sx) {
            acc += geo.ClassLevel(j - 0.5 + (sx + 0.5) / kSuperSample,
                                  i - 0.5 + (sy + 0.5) / kSuperSample);
          }
        }
        value = acc / (kSuperSample * kSuperSample);
      }
      image[static_cast<std::size_t>(i) * n + j] = value;
    }
  }
  return image;
}

CineSequence GenerateSubject(const PhantomSpec& spec, std::uint32_t subject_id) {
  spec.Validate();
  CineSequence seq;
  seq.subject_id = subject_id;
  seq.frames = spec.frames;
  seq.height = spec.image_size;
  seq.width = spec.image_size;
  seq.spec = spec;
  const std::size_t plane = static_cast<std::size_t>(spec.image_size) * spec.image_size;
  seq.pixels.reserve(plane * spec.frames);
  seq.labels.reserve(kRegions * spec.frames);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int f = 0; f < spec.frames; ++f) {
    std::vector<double> image = RenderFrame(spec, f);
    if (spec.noise_sigma > 0.0) {
      for (double& v : image) v = std::clamp(v + spec.noise_sigma * noise(rng), 0.0, 1.0);
    }
    seq.pixels.insert(seq.pixels.end(), image.begin(), image.end());
    for (std::size_t l = 0; l < kRegions; ++l) {
      seq.labels.push_back(spec.Thickness(l, f + 1.0) / kLabelScale);
    }
  }
  return seq;
}

void PhantomRanges::Validate() const {
  CheckRange(inner_radius, "inner_radius", 0.0);
  CheckRange(base_thickness, "base_thickness", 0.0);
  CheckRange(amplitude, "amplitude", 0.0);
  CheckRange(noise_sigma, "noise_sigma", 0.0);
  CheckRange(phase, "phase", -1e300);
  CheckRange(contraction, "contraction", 0.0);
  CheckRange(center_jitter, "center_jitter", 0.0);
  if (image_size < 8 || frames < 1) {
    throw std::invalid_argument("phantom ranges: bad image size or frame count");
  }
}

PhantomSpec DrawSpec(const PhantomRanges& ranges, std::uint64_t seed, std::uint32_t subject_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    subject_id, 0x52575444u};
  std::mt19937_64 rng(seq);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    PhantomSpec spec;
    spec.image_size = ranges.image_size;
    spec.frames = ranges.frames;
    spec.inner_radius_base = Draw(ranges.inner_radius, rng);
    for (double& w : spec.base_thickness) w = Draw(ranges.base_thickness, rng);
    for (double& a : spec.amplitude) a = Draw(ranges.amplitude, rng);
    spec.noise_sigma = Draw(ranges.noise_sigma, rng);
    spec.phase = Draw(ranges.phase, rng);
    spec.contraction = Draw(ranges.contraction, rng);
    const double jitter_x = Draw(ranges.center_jitter, rng);
    const double jitter_y = Draw(ranges.center_jitter, rng);
    const bool flip_x = (rng() & 1u) != 0, flip_y = (rng() & 1u) != 0;
    spec.center_x = ranges.image_size / 2.0 + (flip_x ? -jitter_x : jitter_x);
    spec.center_y = ranges.image_size / 2.0 + (flip_y ? -jitter_y : jitter_y);
    spec.seed = rng();
    try {
      spec.Validate();
      return spec;
    } catch (const std::invalid_argument&) {
      // redraw
    }
  }
  throw std::invalid_argument("phantom ranges never produce a spec that fits the image");
}

std::vector<CineSequence> GenerateDataset(std::size_t n_subjects, std::uint64_t seed,
                                          const PhantomRanges& ranges) {
  if (n_subjects == 0) throw std::invalid_argument("dataset needs at least one subject");
  ranges.Validate();
  std::vector<CineSequence> out;
  out.reserve(n_subjects);
  for (std::size_t s = 0; s < n_subjects; ++s) {
    const auto id = static_cast<std::uint32_t>(s);
    out.push_back(GenerateSubject(DrawSpec(ranges, seed, id), id));
  }
  return out;
}

CropOffset ChooseCrop(int size, int crop, CropMode mode, std::mt19937_64* rng) {
  if (crop > size || crop < 1) {
    throw std::invalid_argument("crop " + std::to_string(crop) + " does not fit " +
                                std::to_string(size));
  }
  const int slack = size - crop;
  if (mode == CropMode::kCenter) return {slack / 2, slack / 2};
  if (rng == nullptr) throw std::invalid_argument("random crop needs an rng");
  std::uniform_int_distribution<int> pick(0, slack);
  const int x = pick(*rng);
  const int y = pick(*rng);
  return {x, y};
}

std::vector<double> Crop(std::span<const double> image, int size, int crop, CropOffset at) {
  if (image.size() != static_cast<std::size_t>(size) * size) {
    throw std::invalid_argument("crop: image is not " + std::to_string(size) + "x" +
                                std::to_string(size));
  }
  if (at.x < 0 || at.y < 0 || at.x + crop > size || at.y + crop > size) {
    throw std::invalid_argument("crop window outside the image");
  }
  std::vector<double> out(static_cast<std::size_t>(crop) * crop);
  for (int i = 0; i < crop; ++i) {
    const auto* src = image.data() + static_cast<std::size_t>(i + at.y) * size + at.x;
    std::copy(src, src + crop, out.begin() + static_cast<std::ptrdiff_t>(i) * crop);
  }
  return out;
}

std::vector<double> AugmentCrop(std::span<const double> image, int size, CropMode mode,
                                std::mt19937_64* rng) {
  if (size != 80) throw std::invalid_argument("augment_crop expects an 80x80 image");
  return Crop(image, size, kCropSize, ChooseCrop(size, kCropSize, mode, rng));
}

}  // namespace rwt::phantom
