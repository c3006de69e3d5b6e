#pragma once

// Structured latent mappings z = g(y) applied to the intermediary Gaussian
// latent y. Every mapping works row-wise on a batch (batch x dim_y); the
// value-level helpers also accept a single rank-1 vector.
//
// Trainable mapping parameters live in the model's parameter store:
//   mapping.logits            clustered, learnable sector proportions (K)
//   mapping.bias              clustered axis mode, learnable shift (1)
//   mapping.selector.{W,b}i   sparse dimension selector
//   mapping.combiner<j>.{W,b}i hierarchical combiners

#include <array>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "intel_latent/mlp.hpp"
#include "intel_latent/rng.hpp"
#include "intel_latent/tape.hpp"

namespace intel_latent::mappings {

using diff::Mlp;
using diff::NamedTensors;
using diff::Node;
using diff::Tape;

inline constexpr std::string_view kLogitsParam = "mapping.logits";
inline constexpr std::string_view kBiasParam = "mapping.bias";

/// Which scale factor the two-hole glue uses on the second coordinate:
///   corrected: sqrt(1 - (1 - |x1|)^2), vanishes at x1 = 0 so (0, 1) and
///              (0, -1) land on the same image (the default)
///   printed:   sqrt(4/3 - (1 - |x1|)^2), kept for comparison; it does not
///              identify that pair
enum class GlueVariant { corrected, printed };

enum class ClusterMode {
  sector,  // K angular sectors on coordinate pairs (0,1), (2,3), ...
  axis,    // K = 2 split of coordinate 0 at the origin
};

struct IdentityMapping {};

struct RadialMapping {
  double epsilon = 1e-4;
};

struct GlueMapping {
  int holes = 2;  // 1 = radial projection only
  double epsilon = 1e-4;
  GlueVariant variant = GlueVariant::corrected;
};

struct ClusteredMapping {
  std::size_t k = 2;
  double c1 = 5.0;
  double c2 = 0.2;
  ClusterMode mode = ClusterMode::sector;
  /// Sector count per coordinate pair when K factorises; empty means {k}.
  std::vector<std::size_t> factors;
  bool learnable_proportions = false;
  bool learnable_bias = false;

  std::vector<std::size_t> plane_factors() const;
};

struct SparseMapping {
  Mlp selector;  // dim_y -> ... -> dim_y, sigmoid output
};

struct HierarchicalMapping {
  std::vector<std::size_t> layer_dims;
  std::vector<Mlp> combiners;
};

struct MappingSpec {
  std::variant<IdentityMapping, RadialMapping, GlueMapping, ClusteredMapping, SparseMapping,
               HierarchicalMapping>
      kind;

  std::string_view name() const;
  /// Throws std::invalid_argument if the spec cannot act on dim_y.
  void validate(std::size_t dim_y) const;
  bool produces_gates() const { return std::holds_alternative<SparseMapping>(kind); }
};

MappingSpec identity_mapping();
MappingSpec radial_mapping(double epsilon = 1e-4);
MappingSpec glue_mapping(GlueVariant variant = GlueVariant::corrected, double epsilon = 1e-4,
                         int holes = 2);
MappingSpec clustered_mapping(std::size_t k, double c1 = 5.0, double c2 = 0.2,
                              bool learnable_proportions = false);
/// Selector dim_y -> hidden... -> dim_y, relu hidden layers, sigmoid output.
MappingSpec sparse_mapping(std::size_t dim_y, const std::vector<std::size_t>& hidden = {10, 10});
/// One linear + tanh combiner per layer; combiner j maps
/// (layer_dims[j-1] + layer_dims[j]) -> layer_dims[j] (j = 0: d0 -> d0).
MappingSpec hierarchical_mapping(const std::vector<std::size_t>& layer_dims);

/// Add the mapping's trainable parameters (if any) to `params`.
void initialize_mapping(const MappingSpec& spec, NamedTensors& params, Rng& rng);

struct MappingNodes {
  Node z;
  std::optional<Node> gates;  // sparse mapping only
};

/// Record g on `tape`, applied to y (batch x dim_y).
MappingNodes build_mapping(Tape& tape, const MappingSpec& spec, Node y);

/// Evaluate g on concrete values.
Tensor apply_mapping(const MappingSpec& spec, const NamedTensors& params, const Tensor& y);

// ---- Sector geometry -----------------------------------------------------

struct SectorGeometry {
  std::size_t k = 0;
  std::vector<double> boundaries;                  // start angle of each sector, [0, 2pi)
  std::vector<double> widths;                      // angular widths, sum 2pi
  std::vector<std::array<double, 2>> centers;      // unit bisector of each sector

  /// Sector containing an angle in [0, 2pi).
  std::size_t sector_of(double angle) const;
};

/// Equal sectors when `logits` is empty, otherwise widths 2pi*softmax(u).
/// Sector 0 starts at angle 0. Throws for k < 2 or a length mismatch.
SectorGeometry sector_geometry(std::size_t k, std::optional<Tensor> logits = std::nullopt);

// ---- Individual mappings on values ----------------------------------------

/// y / (||y|| + epsilon), row-wise.
Tensor radial_project(const Tensor& y, double epsilon = 1e-4);

/// Two-hole glue applied to the output of radial_project (batch x 2).
Tensor glue_two_hole(const Tensor& projected, GlueVariant variant = GlueVariant::corrected);

/// y + c1 * dis(y)^c2 * center(sector(y)) on coordinates (0, 1).
Tensor cluster_map(const Tensor& y, const SectorGeometry& geom, double c1 = 5.0,
                   double c2 = 0.2);

/// One-dimensional split of coordinate 0: v + c1 |v|^c2 sign(v), v = y0 + bias.
Tensor cluster_map_axis(const Tensor& y, double c1 = 5.0, double c2 = 0.2, double bias = 0.0);

/// y * selector(y); the selector's sigmoid output is written to `gates`.
Tensor sparse_gate(const Tensor& y, const Mlp& selector, const NamedTensors& params,
                   Tensor* gates = nullptr);

Tensor hierarchical_map(const Tensor& y, const HierarchicalMapping& spec,
                        const NamedTensors& params);

}  // namespace intel_latent::mappings
