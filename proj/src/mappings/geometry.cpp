#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "internal.hpp"

namespace intel_latent::mappings {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHalfPi = 0.5 * std::numbers::pi;
}  // namespace

std::size_t SectorGeometry::sector_of(double angle) const {
  // Last sector whose start does not exceed the angle.
  auto it = std::upper_bound(boundaries.begin(), boundaries.end(), angle);
  if (it == boundaries.begin()) return 0;
  return static_cast<std::size_t>(std::distance(boundaries.begin(), it)) - 1;
}

SectorGeometry sector_geometry(std::size_t k, std::optional<Tensor> logits) {
  if (k < 2) throw std::invalid_argument("sector_geometry: K must be at least 2, got " + std::to_string(k));
  SectorGeometry geom;
  geom.k = k;
  geom.boundaries.resize(k);
  geom.widths.resize(k);
  geom.centers.resize(k);
  if (!logits) {
    const double w = kTwoPi / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
      geom.boundaries[i] = w * static_cast<double>(i);
      geom.widths[i] = w;
      const double angle = w * (static_cast<double>(i) + 0.5);
      geom.centers[i] = {std::cos(angle), std::sin(angle)};
    }
    return geom;
  }
  if (logits->size() != k) {
    throw std::invalid_argument("sector_geometry: expected " + std::to_string(k) + " logits, got " +
                                std::to_string(logits->size()));
  }
  const auto u = logits->data();
  const double mx = *std::max_element(u.begin(), u.end());
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += std::exp(u[i] - mx);
  double start = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double w = kTwoPi * std::exp(u[i] - mx) / total;
    geom.boundaries[i] = start;
    geom.widths[i] = w;
    const double angle = start + 0.5 * w;
    geom.centers[i] = {std::cos(angle), std::sin(angle)};
    start += w;
  }
  return geom;
}

namespace detail {

SectorPoint eval_sector_point(double p0, double p1, const SectorGeometry& geom, double c1,
                              double c2) {
  SectorPoint sp;
  const double r = std::hypot(p0, p1);
  double theta = std::atan2(p1, p0);
  if (theta < 0.0) theta += kTwoPi;
  if (theta >= kTwoPi) theta = 0.0;

  const std::size_t k = geom.sector_of(theta);
  sp.sector = k;
  const double start = geom.boundaries[k];
  const double end = start + geom.widths[k];

  // Distance to the start ray.
  double d_start = r;
  std::array<double, 2> g_start{r > 0 ? p0 / r : 0.0, r > 0 ? p1 / r : 0.0};
  double g_start_angle = 0.0;
  if (theta - start <= kHalfPi) {
    const double cs = std::cos(start), sn = std::sin(start);
    d_start = cs * p1 - sn * p0;
    g_start = {-sn, cs};
    g_start_angle = -(cs * p0 + sn * p1);
  }
  // Distance to the end ray.
  double d_end = r;
  std::array<double, 2> g_end{r > 0 ? p0 / r : 0.0, r > 0 ? p1 / r : 0.0};
  double g_end_angle = 0.0;
  if (end - theta <= kHalfPi) {
    const double cs = std::cos(end), sn = std::sin(end);
    d_end = sn * p0 - cs * p1;
    g_end = {sn, -cs};
    g_end_angle = cs * p0 + sn * p1;
  }

  if (d_start <= d_end) {
    sp.dis = d_start;
    sp.ddis_dp = g_start;
    sp.ddis_dstart = g_start_angle;
  } else {
    sp.dis = d_end;
    sp.ddis_dp = g_end;
    sp.ddis_dend = g_end_angle;
  }
  if (sp.dis < 0.0) sp.dis = 0.0;  // rounding on a boundary ray

  sp.center = geom.centers[k];
  sp.center_angle = start + 0.5 * geom.widths[k];
  sp.shift = sp.dis > 0.0 ? c1 * std::pow(sp.dis, c2) : 0.0;
  sp.shift_slope = sp.dis > 0.0 ? c1 * c2 * std::pow(sp.dis, c2 - 1.0) : 0.0;
  sp.out = {p0 + sp.shift * sp.center[0], p1 + sp.shift * sp.center[1]};
  return sp;
}

}  // namespace detail
}  // namespace intel_latent::mappings
