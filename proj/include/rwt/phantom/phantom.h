#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

// Synthetic short-axis cine phantoms with analytically known regional wall
// thickness (RWT).
//
// Geometry: an annulus around `center`. Angles are measured counter-clockwise
// with the y axis pointing up the image (row index grows downwards). The six
// 60-degree sectors have midpoints at 210 + 60*l degrees for l = 0..5, i.e.
// IS, I, IL, AL, A, AS in counter-clockwise order with the anterior wall at
// the top of the image.
namespace rwt::phantom {

inline constexpr std::size_t kRegions = 6;
inline constexpr std::array<std::string_view, kRegions> kRegionNames = {"IS", "I",  "IL",
                                                                        "AL", "A",  "AS"};
// Label normalization: thickness in pixels divided by the image extent.
inline constexpr double kLabelScale = 80.0;
// Half-width of the linear blend between neighbouring sectors.
inline constexpr double kBlendDegrees = 5.0;

struct PhantomSpec {
  int image_size = 80;
  int frames = 20;
  double center_x = 40.0;
  double center_y = 40.0;
  double inner_radius_base = 15.0;
  std::array<double, kRegions> base_thickness = {10, 10, 10, 10, 10, 10};
  std::array<double, kRegions> amplitude = {4, 4, 4, 4, 4, 4};
  // Fraction of the cycle, added as 2*pi*phase to the thickening phase.
  double phase = 0.0;
  // Inner radius shrinks by this much at peak systole.
  double contraction = 0.0;
  double blood_level = 0.85;
  double myocardium_level = 0.45;
  double background_level = 0.10;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument when the annulus does not fit or a
  // thickness trajectory is not strictly positive.
  void Validate() const;

  // Systolic activation s(f) = (1 - cos(2 pi (f-1)/F + 2 pi phase)) / 2,
  // frame is 1-based.
  double Activation(double frame) const;
  // w_l(f) in pixels; region is 0-based.
  double Thickness(std::size_t region, double frame) const;
  double InnerRadius(double frame) const;
  // Thickness along a ray at polar angle `degrees`, blended at sector borders.
  double ThicknessAtAngle(double degrees, double frame) const;
};

// Midpoint angle of a 0-based region, in degrees.
double RegionMidpointDegrees(std::size_t region);

struct CineSequence {
  std::uint32_t subject_id = 0;
  int frames = 0;
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // frames x height x width, row-major
  std::vector<double> labels;  // frames x kRegions, normalized units
  PhantomSpec spec;

  std::span<const double> Frame(int f) const {
    const std::size_t n = static_cast<std::size_t>(height) * width;
    return std::span<const double>(pixels).subspan(static_cast<std::size_t>(f) * n, n);
  }
  double Label(int frame, std::size_t region) const {
    return labels[static_cast<std::size_t>(frame) * kRegions + region];
  }
};

// Renders one noiseless frame (0-based frame index) with area-weighted edges.
std::vector<double> RenderFrame(const PhantomSpec& spec, int frame);

CineSequence GenerateSubject(const PhantomSpec& spec, std::uint32_t subject_id = 0);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct PhantomRanges {
  Range inner_radius{12.0, 18.0};
  Range base_thickness{6.0, 14.0};
  Range amplitude{2.0, 6.0};
  Range noise_sigma{0.02, 0.05};
  Range phase{0.0, 0.2};
  Range contraction{0.0, 2.0};
  // Uniform jitter of the centre in pixels (both axes).
  Range center_jitter{0.0, 0.0};
  int image_size = 80;
  int frames = 20;

  void Validate() const;
};

// Per-subject specs are drawn uniformly from the ranges with an rng stream
// derived from (seed, subject id); draws that violate PhantomSpec::Validate
// are redrawn. Subject ids are 0..n-1.
std::vector<CineSequence> GenerateDataset(std::size_t n_subjects, std::uint64_t seed,
                                          const PhantomRanges& ranges = {});

PhantomSpec DrawSpec(const PhantomRanges& ranges, std::uint64_t seed, std::uint32_t subject_id);

enum class CropMode { kRandom, kCenter };

struct CropOffset {
  int x = 0;
  int y = 0;
};

inline constexpr int kCropSize = 75;

// Offset for a crop of `crop` pixels from an image of `size` pixels: random
// mode is uniform over {0..size-crop}^2, centre mode is (size-crop)/2 rounded
// down.
CropOffset ChooseCrop(int size, int crop, CropMode mode, std::mt19937_64* rng);

// Crops a square `crop` x `crop` window from a square `size` image.
std::vector<double> Crop(std::span<const double> image, int size, int crop, CropOffset at);

// 80x80 -> 75x75. Labels are unaffected by cropping.
std::vector<double> AugmentCrop(std::span<const double> image, int size, CropMode mode,
                                std::mt19937_64* rng);

}  // namespace rwt::phantom
