#include "raycast.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rwt::testing {

double Bilinear(std::span<const double> image, int size, double x, double y) {
  x = std::clamp(x, 0.0, size - 1.0);
  y = std::clamp(y, 0.0, size - 1.0);
  const int j0 = std::min(static_cast<int>(x), size - 2);
  const int i0 = std::min(static_cast<int>(y), size - 2);
  const double tx = x - j0, ty = y - i0;
  auto at = [&](int i, int j) { return image[static_cast<std::size_t>(i) * size + j]; };
  return (1 - ty) * ((1 - tx) * at(i0, j0) + tx * at(i0, j0 + 1)) +
         ty * ((1 - tx) * at(i0 + 1, j0) + tx * at(i0 + 1, j0 + 1));
}

double RayThickness(std::span<const double> image, int size, double cx, double cy,
                    double degrees, const Levels& levels) {
  const double t = degrees * std::numbers::pi / 180.0;
  const double dx = std::cos(t), dy = -std::sin(t);
  const double inner_cut = 0.5 * (levels.blood + levels.myocardium);
  const double outer_cut = 0.5 * (levels.myocardium + levels.background);
  constexpr double kStep = 0.01;
  double inner = -1.0;
  double prev_r = 0.0;
  double prev_v = Bilinear(image, size, cx, cy);
  for (double r = kStep; r < size; r += kStep) {
    const double v = Bilinear(image, size, cx + r * dx, cy + r * dy);
    const double cut = inner < 0.0 ? inner_cut : outer_cut;
    if (prev_v >= cut && v < cut) {
      const double crossing = prev_r + kStep * (prev_v - cut) / (prev_v - v);
      if (inner < 0.0) {
        inner = crossing;
      } else {
        return crossing - inner;
      }
    }
    prev_r = r;
    prev_v = v;
  }
  return -1.0;
}

std::array<double, 6> RegionThickness(std::span<const double> image, int size, double cx,
                                      double cy, const Levels& levels) {
  std::array<double, 6> out{};
  for (int l = 0; l < 6; ++l) {
    const double mid = 210.0 + 60.0 * l;
    double acc = 0.0;
    int n = 0;
    for (int d = -25; d <= 25; ++d) {
      acc += RayThickness(image, size, cx, cy, std::fmod(mid + d, 360.0), levels);
      ++n;
    }
    out[l] = acc / n;
  }
  return out;
}

}  // namespace rwt::testing
