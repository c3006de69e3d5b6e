#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "intel_latent/rng.hpp"
#include "intel_latent/tensor.hpp"

namespace intel_latent::metrics {

/// Mean Hoyer sparsity of the rows of Z (n x D) after dividing each column
/// by its population std (std < 1e-9 is treated as 1):
///   hoyer(z) = (sqrt(D) - |z|_1 / |z|_2) / (sqrt(D) - 1)
/// Rows with |z|_2 < 1e-12 score 0. Requires n >= 2 and D >= 2.
double hoyer_score(const Tensor& z);

/// Hoyer value of a single vector (no standardisation).
double hoyer(const double* z, std::size_t d);

/// 2 E|a - b| - E|a - a'| - E|b - b'|, within-set terms over ordered pairs
/// i != j (0 for a singleton). Rows are points.
double energy_distance(const Tensor& a, const Tensor& b);

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

using LogDensity = std::function<double(const std::vector<double>&)>;
using Sampler = std::function<std::vector<double>(Rng&)>;

/// Mean of log q(y) - log p(y) over n >= 100 draws y ~ q, with its sample
/// standard error. Throws NumericError naming the first non-finite sample.
McEstimate mc_kl(const LogDensity& log_q, const LogDensity& log_p, const Sampler& sample_q, std::size_t n,
                 std::uint64_t seed);

struct ModeStats {
  double uncertainty = 0.0;          // fraction farther than band * std from every mean
  std::vector<double> proportions;   // nearest-mode shares among confident samples
  std::size_t n = 0;
  std::size_t confident = 0;
};

ModeStats mode_stats(const Tensor& samples, const std::vector<std::vector<double>>& means, double std,
                     double confidence_band = 3.0);

struct MetricReport {
  std::string name;
  double value = 0.0;
  std::optional<double> stderr_;
  std::size_t n = 0;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();

  /// One JSON object on one line, fixed key order.
  std::string to_json_line() const;
};

MetricReport metric_report_from_json(const nlohmann::ordered_json& j);
void write_reports(std::ostream& out, const std::vector<MetricReport>& reports);

}  // namespace intel_latent::metrics
