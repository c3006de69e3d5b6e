#pragma once

// Seeded toy distributions and IDX digit ingestion.
//
// Draw order per sample (fixed, so datasets are reproducible anywhere):
// the shape's own draws first, then dim normals for the isotropic noise when
// noise_std > 0.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "intel_latent/tensor.hpp"

namespace intel_latent::synth {

enum class DataShape { circle, square, star, infinity, mog, sparse2d };

std::string_view to_string(DataShape s);
/// Throws std::invalid_argument listing the valid names.
DataShape data_shape_from_string(std::string_view name);
std::string valid_shape_names();

struct MixtureSpec {
  std::vector<std::vector<double>> means{{-2.0, 0.0}, {2.0, 0.0}};
  std::vector<double> stds{0.3, 0.3};
  std::vector<double> weights{0.5, 0.5};
};

struct DatasetSpec {
  DataShape shape = DataShape::circle;
  std::size_t n = 1000;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  std::size_t star_points = 5;
  MixtureSpec mixture;

  void validate() const;
};

struct LabeledBatch {
  Tensor samples;                        // n x dim
  std::optional<std::vector<int>> labels;
};

/// circle      uniform angle on the unit circle
/// square      uniform by perimeter on the boundary of [-1, 1]^2
/// star        uniform by arc length on a regular star polygon, outer
///             radius 1, first tip on the +y axis
/// infinity    lemniscate (cos t, sin t cos t) / (1 + sin^2 t), t uniform
/// mog         component by weight, then Gaussian; label = component
/// sparse2d    uniform axis, Laplace(0, 1) along it; label = axis
LabeledBatch gen_synthetic(const DatasetSpec& spec);

/// Inner radius of the star for a given number of tips.
double star_inner_radius(std::size_t points);
/// Corner points of the star outline in order (2 * points of them).
std::vector<std::array<double, 2>> star_vertices(std::size_t points);

/// Point on the lemniscate at parameter t.
std::array<double, 2> lemniscate(double t);

// ---- IDX -----------------------------------------------------------------

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxOptions {
  std::optional<std::set<int>> class_filter;
  double binarize_threshold = 0.5;
  /// 2x2 mean pool (28x28 -> 14x14) before thresholding.
  bool downsample = false;
  /// Label file; derived from the image path when empty.
  std::filesystem::path labels_path;
};

/// "train-images-idx3-ubyte" -> "train-labels-idx1-ubyte".
std::filesystem::path idx_labels_path(const std::filesystem::path& images);

/// Binarized, flattened images in [0, 1] with their digit labels. Throws
/// FormatError on a bad magic or truncated file.
LabeledBatch load_idx(const std::filesystem::path& images, const IdxOptions& options = {});

// ---- CSV -----------------------------------------------------------------

/// Header x1,...,xd[,label], then one row per sample with 17 significant
/// digits.
void write_csv(std::ostream& out, const LabeledBatch& batch);
void write_csv(const std::filesystem::path& path, const LabeledBatch& batch);
LabeledBatch read_csv(std::istream& in);
LabeledBatch read_csv(const std::filesystem::path& path);

}  // namespace intel_latent::synth
