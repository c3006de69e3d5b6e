#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "intel_latent/rng.hpp"
#include "intel_latent/synthdata.hpp"

namespace intel_latent::synth {

namespace {

constexpr std::array<std::pair<DataShape, std::string_view>, 6> kShapeNames{{
    {DataShape::circle, "circle"},
    {DataShape::square, "square"},
    {DataShape::star, "star"},
    {DataShape::infinity, "infinity"},
    {DataShape::mog, "mog"},
    {DataShape::sparse2d, "sparse2d"},
}};

constexpr double kPi = std::numbers::pi;

}  // namespace

std::string_view to_string(DataShape s) {
  for (const auto& [shape, name] : kShapeNames) {
    if (shape == s) return name;
  }
  return "unknown";
}

std::string valid_shape_names() {
  std::string out;
  for (const auto& [shape, name] : kShapeNames) {
    if (!out.empty()) out += ", ";
    out += name;
  }
  return out;
}

DataShape data_shape_from_string(std::string_view name) {
  for (const auto& [shape, n] : kShapeNames) {
    if (n == name) return shape;
  }
  throw std::invalid_argument("unknown shape '" + std::string(name) + "' (valid: " + valid_shape_names() + ")");
}

void DatasetSpec::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("dataset: " + msg); };
  if (n == 0) fail("n must be at least 1");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) fail("noise_std must be a finite value >= 0");
  if (shape == DataShape::star && star_points < 3) fail("a star needs at least 3 points");
  if (shape == DataShape::mog) {
    const auto& m = mixture;
    if (m.means.empty()) fail("mixture needs at least one component");
    if (m.stds.size() != m.means.size() || m.weights.size() != m.means.size()) {
      fail("mixture means, stds and weights must have the same length");
    }
    const std::size_t dim = m.means.front().size();
    if (dim == 0) fail("mixture means must be non-empty");
    for (const auto& mean : m.means) {
      if (mean.size() != dim) fail("mixture means must share one dimension");
    }
    for (double s : m.stds) {
      if (!(s >= 0.0)) fail("mixture stds must be >= 0");
    }
    double total = 0.0;
    for (double w : m.weights) {
      if (!(w >= 0.0)) fail("mixture weights must be >= 0");
      total += w;
    }
    if (std::fabs(total - 1.0) > 1e-9) fail("mixture weights must sum to 1 (got " + std::to_string(total) + ")");
  }
}

double star_inner_radius(std::size_t points) {
  const double p = static_cast<double>(points);
  return 0.5 * std::sin(kPi / (2.0 * p)) / std::sin(3.0 * kPi / (2.0 * p));
}

std::vector<std::array<double, 2>> star_vertices(std::size_t points) {
  const double inner = star_inner_radius(points);
  std::vector<std::array<double, 2>> v;
  for (std::size_t i = 0; i < 2 * points; ++i) {
    const double angle = kPi / 2.0 + kPi * static_cast<double>(i) / static_cast<double>(points);
    const double r = i % 2 == 0 ? 1.0 : inner;
    v.push_back({r * std::cos(angle), r * std::sin(angle)});
  }
  return v;
}

std::array<double, 2> lemniscate(double t) {
  const double s = std::sin(t), c = std::cos(t);
  const double d = 1.0 + s * s;
  return {c / d, s * c / d};
}

LabeledBatch gen_synthetic(const DatasetSpec& spec) {
  spec.validate();
  const std::size_t dim = spec.shape == DataShape::mog ? spec.mixture.means.front().size() : 2;
  Rng rng(spec.seed);
  Tensor samples({spec.n, dim});
  std::vector<int> labels;
  const bool labelled = spec.shape == DataShape::mog || spec.shape == DataShape::sparse2d;

  const auto star = spec.shape == DataShape::star ? star_vertices(spec.star_points)
                                                  : std::vector<std::array<double, 2>>{};
  std::vector<double> cumulative;
  if (spec.shape == DataShape::mog) {
    std::partial_sum(spec.mixture.weights.begin(), spec.mixture.weights.end(), std::back_inserter(cumulative));
  }

  for (std::size_t i = 0; i < spec.n; ++i) {
    double* row = samples.raw() + i * dim;
    switch (spec.shape) {
      case DataShape::circle: {
        const double t = 2.0 * kPi * rng.uniform();
        row[0] = std::cos(t);
        row[1] = std::sin(t);
        break;
      }
      case DataShape::square: {
        const double t = 8.0 * rng.uniform();
        const int side = std::min(static_cast<int>(t / 2.0), 3);
        const double s = t - 2.0 * side - 1.0;
        const double xs[4] = {1.0, -s, -1.0, s};
        const double ys[4] = {s, 1.0, -s, -1.0};
        row[0] = xs[side];
        row[1] = ys[side];
        break;
      }
      case DataShape::star: {
        const std::size_t e = rng.index(star.size());
        const double t = rng.uniform();
        const auto& a = star[e];
        const auto& b = star[(e + 1) % star.size()];
        row[0] = a[0] + t * (b[0] - a[0]);
        row[1] = a[1] + t * (b[1] - a[1]);
        break;
      }
      case DataShape::infinity: {
        const auto p = lemniscate(2.0 * kPi * rng.uniform());
        row[0] = p[0];
        row[1] = p[1];
        break;
      }
      case DataShape::mog: {
        const double u = rng.uniform();
        std::size_t k = 0;
        while (k + 1 < cumulative.size() && u >= cumulative[k]) ++k;
        for (std::size_t d = 0; d < dim; ++d) row[d] = spec.mixture.means[k][d] + spec.mixture.stds[k] * rng.normal();
        labels.push_back(static_cast<int>(k));
        break;
      }
      case DataShape::sparse2d: {
        const auto axis = rng.index(2);
        row[0] = row[1] = 0.0;
        row[axis] = rng.laplace(1.0);
        labels.push_back(static_cast<int>(axis));
        break;
      }
    }
    if (spec.noise_std > 0.0) {
      for (std::size_t d = 0; d < dim; ++d) row[d] += spec.noise_std * rng.normal();
    }
  }
  LabeledBatch out{std::move(samples), std::nullopt};
  if (labelled) out.labels = std::move(labels);
  return out;
}

}  // namespace intel_latent::synth
