#pragma once

#include <array>
#include <cstddef>
#include <memory>

#include "intel_latent/mappings.hpp"

namespace intel_latent::mappings::detail {

/// Sector map of one planar point together with its local derivatives.
struct SectorPoint {
  std::size_t sector = 0;
  std::array<double, 2> out{};
  double dis = 0.0;
  double shift = 0.0;        // c1 * dis^c2
  double shift_slope = 0.0;  // d shift / d dis (0 at dis = 0)
  std::array<double, 2> center{};
  std::array<double, 2> ddis_dp{};
  double ddis_dstart = 0.0;
  double ddis_dend = 0.0;
  double center_angle = 0.0;
};

SectorPoint eval_sector_point(double p0, double p1, const SectorGeometry& geom, double c1,
                              double c2);

std::shared_ptr<const diff::CustomOp> make_glue_op(GlueVariant variant);
std::shared_ptr<const diff::CustomOp> make_sector_op(std::vector<std::size_t> factors, double c1,
                                                     double c2, bool learnable);
std::shared_ptr<const diff::CustomOp> make_axis_op(double c1, double c2, bool learnable_bias);

}  // namespace intel_latent::mappings::detail
