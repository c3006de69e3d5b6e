#pragma once

// Numerical checks of the pushforward KL results on tractable instances:
//   * invertible g leaves KL unchanged (affine maps of Gaussians, closed form)
//   * a measurable non-invertible g (coordinate projection) can only lower KL
//   * with invertible g, ELBO_Y equals the ELBO written on Z with
//     change-of-variables densities (Monte Carlo)

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace intel_latent::divergence {

struct GaussianSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // symmetric positive definite

  static GaussianSpec diagonal(const Eigen::VectorXd& mean, const Eigen::VectorXd& variances);
  static GaussianSpec standard(Eigen::Index dim);

  Eigen::Index dim() const { return mean.size(); }
  bool is_diagonal() const;
  /// Throws std::invalid_argument unless the covariance is SPD and sized.
  void validate() const;
  double log_density(const Eigen::VectorXd& y) const;
};

/// KL(q || p) via Cholesky factors.
double kl_gaussian(const GaussianSpec& q, const GaussianSpec& p);

struct AffineCheck {
  double lhs = 0.0;    // KL(A q + b || A p + b)
  double rhs = 0.0;    // KL(q || p)
  double delta = 0.0;  // |lhs - rhs|
  bool passed = false; // delta < 1e-9
};

/// Throws std::invalid_argument when |det A| <= 1e-12.
AffineCheck check_affine_invariance(const GaussianSpec& q, const GaussianSpec& p, const Eigen::MatrixXd& a,
                                    const Eigen::VectorXd& b);

struct MarginalCheck {
  double kl_marginal = 0.0;  // KL between the kept marginals
  double kl_full = 0.0;
  bool holds = false;        // kl_marginal <= kl_full (+1e-12)
  bool strict = false;       // kl_marginal < kl_full
  double dropped_kl = 0.0;   // sum of the dropped 1-D KLs
};

/// Diagonal q against N(0, I), g = projection onto `keep` (a nonempty proper
/// subset of the dimensions).
MarginalCheck check_marginal_inequality(const GaussianSpec& q, const std::vector<std::size_t>& keep);
/// Same with a diagonal reference p in place of N(0, I).
MarginalCheck check_marginal_inequality(const GaussianSpec& q, const GaussianSpec& p,
                                        const std::vector<std::size_t>& keep);

/// Invertible g used by the ELBO check.
struct InvertibleTestMap {
  enum class Kind { affine, elementwise };
  Kind kind = Kind::elementwise;
  Eigen::MatrixXd a_matrix;  // affine
  Eigen::VectorXd b;         // affine
  double a = 0.5;            // elementwise: y + a tanh(y), 0 <= a < 1

  static InvertibleTestMap affine(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);
  static InvertibleTestMap elementwise(double a);

  void validate(Eigen::Index dim) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& y) const;
  /// Affine: LU solve. Elementwise: bracketed Newton per coordinate.
  Eigen::VectorXd inverse(const Eigen::VectorXd& z) const;
  /// log |det dg/dy| at y.
  double log_abs_det_jacobian(const Eigen::VectorXd& y) const;
};

/// Pushforward density of `base` under g, evaluated at z.
double pushforward_log_density(const GaussianSpec& base, const InvertibleTestMap& g, const Eigen::VectorXd& z);

/// Linear Gaussian decoder p(x | z) = N(x; W z + c, sigma^2 I).
struct LinearDecoder {
  Eigen::MatrixXd w;
  Eigen::VectorXd c;
  double sigma = 1.0;

  double log_likelihood(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const;
};

struct ElboEquivalenceInput {
  GaussianSpec posterior;  // q(y | x), diagonal
  InvertibleTestMap map;
  LinearDecoder decoder;
  Eigen::VectorXd x;
  std::size_t n_mc = 100000;
  std::uint64_t seed = 0;
};

struct ElboEquivalence {
  double lhs = 0.0;            // ELBO_Y: mean of log p(x|g(y)) - log q(y) + log N(y; 0, I)
  double rhs = 0.0;            // Z-space ELBO: mean of log p(x|z) - log q_Z(z) + log p_Z(z)
  double delta = 0.0;          // |lhs - rhs|
  double stderr_ = 0.0;        // combined standard error of lhs and rhs
  double lhs_analytic = 0.0;   // mean log p(x|g(y)) - KL(q || N(0, I)) in closed form
  double kl_y = 0.0;           // closed form on Y
  double kl_z = 0.0;           // change of variables, Monte Carlo on Z
  double kl_z_stderr = 0.0;
  double max_sample_gap = 0.0; // max over draws of |Y-space minus Z-space integrand|
  bool passed = false;         // delta < 3 stderr and |kl_y - kl_z| < 3 kl_z_stderr
};

/// Throws std::invalid_argument when n_mc < 10^4 or the inputs disagree in
/// dimension.
ElboEquivalence check_elbo_equivalence(const ElboEquivalenceInput& input);

// ---- Randomised sweeps ------------------------------------------------------

struct SweepSummary {
  std::size_t cases = 0;
  double max_delta = 0.0;            // affine: max |lhs - rhs|
  std::size_t violations = 0;        // marginal: kl_marginal > kl_full
  std::size_t strict_expected = 0;   // marginal: dropped 1-D KL > 1e-6
  std::size_t strict_missed = 0;     // ... but equality reported
  bool passed = false;
};

/// Random SPD pairs (q, p) and random well-conditioned A, b in `dim`
/// dimensions. Passes when max_delta < 1e-9.
SweepSummary affine_invariance_sweep(std::size_t pairs, Eigen::Index dim, std::uint64_t seed);

/// Random diagonal q (dimension 2..6) against N(0, I), random kept subset.
/// Passes with zero violations and zero missed strict cases.
SweepSummary marginal_inequality_sweep(std::size_t cases, std::uint64_t seed);

/// One-dimensional toy instance: q(y|x) = N(0.7, 0.6^2), g(y) = y + a tanh y,
/// p(x|z) = N(1.5 z + 0.2, 0.5^2), x = 1.
ElboEquivalenceInput toy_elbo_instance(double a, std::size_t n_mc, std::uint64_t seed);

}  // namespace intel_latent::divergence
