#include "intel_latent/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "intel_latent/errors.hpp"
#include "intel_latent/kernels.hpp"
#include "intel_latent/parallel.hpp"

namespace intel_latent::metrics {

double hoyer(const double* z, std::size_t d) {
  if (d < 2) throw std::invalid_argument("hoyer: needs at least 2 dimensions");
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    l1 += std::fabs(z[i]);
    l2 += z[i] * z[i];
  }
  l2 = std::sqrt(l2);
  if (l2 < 1e-12) return 0.0;
  const double root = std::sqrt(static_cast<double>(d));
  return (root - l1 / l2) / (root - 1.0);
}

double hoyer_score(const Tensor& z) {
  if (z.rank() != 2) throw ShapeError("hoyer_score: Z must be n x D, got " + shape_string(z.shape()));
  const std::size_t n = z.rows(), d = z.cols();
  if (d < 2) throw std::invalid_argument("hoyer_score: needs D >= 2");
  if (n < 2) throw std::invalid_argument("hoyer_score: needs at least 2 rows");
  std::vector<double> sigma(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += z[i * d + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (z[i * d + j] - mean) * (z[i * d + j] - mean);
    const double s = std::sqrt(var / static_cast<double>(n));
    sigma[j] = s < 1e-9 ? 1.0 : s;
  }
  std::vector<double> row(d);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) row[j] = z[i * d + j] / sigma[j];
    total += hoyer(row.data(), d);
  }
  return total / static_cast<double>(n);
}

namespace {

constexpr std::size_t kBlockRows = 64;

// Sum of all pairwise distances, reduced block by block in a fixed order.
double distance_sum(const Tensor& a, const Tensor& b) {
  const std::size_t na = a.rows(), nb = b.rows(), d = a.cols();
  const std::size_t blocks = (na + kBlockRows - 1) / kBlockRows;
  std::vector<double> partial(blocks, 0.0);
  const auto& k = kernels::active();
  parallel_blocks(blocks, [&](std::size_t blk) {
    const std::size_t begin = blk * kBlockRows, rows = std::min(kBlockRows, na - begin);
    partial[blk] = k.pairwise_distance_sum(a.raw() + begin * d, rows, b.raw(), nb, d);
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

double energy_distance(const Tensor& a, const Tensor& b) {
  if (a.rank() > 2 || b.rank() > 2) throw ShapeError("energy_distance: point sets must be rank 1 or 2");
  if (a.cols() != b.cols()) {
    throw ShapeError("energy_distance: dimension mismatch " + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()));
  }
  const double na = static_cast<double>(a.rows()), nb = static_cast<double>(b.rows());
  const double cross = distance_sum(a, b) / (na * nb);
  const double within_a = a.rows() > 1 ? distance_sum(a, a) / (na * (na - 1.0)) : 0.0;
  const double within_b = b.rows() > 1 ? distance_sum(b, b) / (nb * (nb - 1.0)) : 0.0;
  return 2.0 * cross - within_a - within_b;
}

McEstimate mc_kl(const LogDensity& log_q, const LogDensity& log_p, const Sampler& sample_q, std::size_t n,
                 std::uint64_t seed) {
  if (n < 100) throw std::invalid_argument("mc_kl: needs n >= 100");
  Rng rng(seed);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = sample_q(rng);
    const double lq = log_q(y), lp = log_p(y);
    if (!std::isfinite(lq) || !std::isfinite(lp)) {
      throw NumericError("mc_kl: non-finite log density at sample " + std::to_string(i));
    }
    const double v = lq - lp;
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

ModeStats mode_stats(const Tensor& samples, const std::vector<std::vector<double>>& means, double std,
                     double confidence_band) {
  if (means.empty()) throw std::invalid_argument("mode_stats: needs at least one mode");
  if (!(std > 0.0)) throw std::invalid_argument("mode_stats: std must be positive");
  const std::size_t n = samples.rows(), d = samples.cols();
  for (const auto& m : means) {
    if (m.size() != d) throw ShapeError("mode_stats: mode dimension differs from sample dimension");
  }
  ModeStats out;
  out.n = n;
  std::vector<std::size_t> counts(means.size(), 0);
  std::size_t uncertain = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t k = 0; k < means.size(); ++k) {
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) dist += (samples[i * d + j] - means[k][j]) * (samples[i * d + j] - means[k][j]);
      if (dist < best) {
        best = dist;
        arg = k;
      }
    }
    if (std::sqrt(best) > confidence_band * std) {
      ++uncertain;
    } else {
      ++counts[arg];
    }
  }
  out.confident = n - uncertain;
  out.uncertainty = n ? static_cast<double>(uncertain) / static_cast<double>(n) : 0.0;
  for (auto c : counts) {
    out.proportions.push_back(out.confident ? static_cast<double>(c) / static_cast<double>(out.confident) : 0.0);
  }
  return out;
}

}  // namespace intel_latent::metrics
