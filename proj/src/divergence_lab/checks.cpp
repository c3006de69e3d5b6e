#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "intel_latent/divergence.hpp"
#include "intel_latent/errors.hpp"
#include "intel_latent/rng.hpp"

namespace intel_latent::divergence {

AffineCheck check_affine_invariance(const GaussianSpec& q, const GaussianSpec& p, const Eigen::MatrixXd& a,
                                    const Eigen::VectorXd& b) {
  if (a.rows() != q.dim() || a.cols() != q.dim() || b.size() != q.dim()) {
    throw std::invalid_argument("check_affine_invariance: A and b must match the dimension");
  }
  if (std::fabs(a.fullPivLu().determinant()) <= 1e-12) {
    throw std::invalid_argument("check_affine_invariance: A is singular");
  }
  auto push = [&](const GaussianSpec& g) {
    Eigen::MatrixXd cov = a * g.cov * a.transpose();
    cov = 0.5 * (cov + cov.transpose());
    return GaussianSpec{a * g.mean + b, cov};
  };
  AffineCheck out;
  out.lhs = kl_gaussian(push(q), push(p));
  out.rhs = kl_gaussian(q, p);
  out.delta = std::fabs(out.lhs - out.rhs);
  out.passed = out.delta < 1e-9;
  return out;
}

MarginalCheck check_marginal_inequality(const GaussianSpec& q, const std::vector<std::size_t>& keep) {
  return check_marginal_inequality(q, GaussianSpec::standard(q.dim()), keep);
}

MarginalCheck check_marginal_inequality(const GaussianSpec& q, const GaussianSpec& p,
                                        const std::vector<std::size_t>& keep) {
  q.validate();
  p.validate();
  if (q.dim() != p.dim()) throw std::invalid_argument("check_marginal_inequality: dimension mismatch");
  if (!q.is_diagonal() || !p.is_diagonal()) {
    throw std::invalid_argument("check_marginal_inequality: q and p must be diagonal");
  }
  const std::set<std::size_t> kept(keep.begin(), keep.end());
  const auto d = static_cast<std::size_t>(q.dim());
  if (kept.empty() || kept.size() >= d || kept.size() != keep.size() || *kept.rbegin() >= d) {
    throw std::invalid_argument("check_marginal_inequality: keep must be a nonempty proper subset of distinct dims");
  }
  MarginalCheck out;
  for (std::size_t i = 0; i < d; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double vq = q.cov(k, k), vp = p.cov(k, k), dm = q.mean(k) - p.mean(k);
    const double kl1 = 0.5 * (vq / vp + dm * dm / vp - 1.0 + std::log(vp / vq));
    (kept.contains(i) ? out.kl_marginal : out.dropped_kl) += kl1;
  }
  out.kl_full = out.kl_marginal + out.dropped_kl;
  out.holds = out.kl_marginal <= out.kl_full + 1e-12;
  out.strict = out.kl_marginal < out.kl_full;
  return out;
}

InvertibleTestMap InvertibleTestMap::affine(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  InvertibleTestMap m;
  m.kind = Kind::affine;
  m.a_matrix = a;
  m.b = b;
  return m;
}

InvertibleTestMap InvertibleTestMap::elementwise(double a) {
  InvertibleTestMap m;
  m.kind = Kind::elementwise;
  m.a = a;
  return m;
}

void InvertibleTestMap::validate(Eigen::Index dim) const {
  if (kind == Kind::elementwise) {
    if (!(a >= 0.0 && a < 1.0)) throw std::invalid_argument("elementwise map needs 0 <= a < 1");
    return;
  }
  if (a_matrix.rows() != dim || a_matrix.cols() != dim || b.size() != dim) {
    throw std::invalid_argument("affine map must be " + std::to_string(dim) + "-dimensional");
  }
  if (std::fabs(a_matrix.fullPivLu().determinant()) <= 1e-12) {
    throw std::invalid_argument("affine map is not invertible");
  }
}

Eigen::VectorXd InvertibleTestMap::forward(const Eigen::VectorXd& y) const {
  if (kind == Kind::affine) return a_matrix * y + b;
  return y.array() + a * y.array().tanh();
}

Eigen::VectorXd InvertibleTestMap::inverse(const Eigen::VectorXd& z) const {
  if (kind == Kind::affine) return a_matrix.fullPivLu().solve(z - b);
  Eigen::VectorXd y(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    // The root lies in [z - a, z + a] since |a tanh| < a.
    double lo = z(i) - a, hi = z(i) + a, t = z(i);
    for (int it = 0; it < 100; ++it) {
      const double th = std::tanh(t);
      const double f = t + a * th - z(i);
      if (f == 0.0) break;
      (f > 0.0 ? hi : lo) = t;
      double next = t - f / (1.0 + a * (1.0 - th * th));
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::fabs(next - t) <= 1e-16 * (1.0 + std::fabs(t))) {
        t = next;
        break;
      }
      t = next;
    }
    y(i) = t;
  }
  return y;
}

double InvertibleTestMap::log_abs_det_jacobian(const Eigen::VectorXd& y) const {
  if (kind == Kind::affine) return std::log(std::fabs(a_matrix.fullPivLu().determinant()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double th = std::tanh(y(i));
    total += std::log1p(a * (1.0 - th * th));
  }
  return total;
}

double pushforward_log_density(const GaussianSpec& base, const InvertibleTestMap& g, const Eigen::VectorXd& z) {
  const Eigen::VectorXd y = g.inverse(z);
  return base.log_density(y) - g.log_abs_det_jacobian(y);
}

double LinearDecoder::log_likelihood(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const {
  const Eigen::VectorXd r = x - (w * z + c);
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * sigma * sigma) - r.squaredNorm() / (2.0 * sigma * sigma);
}

namespace {

struct Running {
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  void add(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  double stderr_() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0; }
};

}  // namespace

ElboEquivalence check_elbo_equivalence(const ElboEquivalenceInput& in) {
  const auto& q = in.posterior;
  q.validate();
  if (!q.is_diagonal()) throw std::invalid_argument("check_elbo_equivalence: posterior must be diagonal");
  if (in.n_mc < 10000) throw std::invalid_argument("check_elbo_equivalence: needs n_mc >= 10^4");
  const Eigen::Index d = q.dim();
  in.map.validate(d);
  if (in.decoder.w.cols() != d || in.decoder.w.rows() != in.x.size() || in.decoder.c.size() != in.x.size()) {
    throw std::invalid_argument("check_elbo_equivalence: decoder shape does not match x and the latent");
  }
  if (!(in.decoder.sigma > 0.0)) throw std::invalid_argument("check_elbo_equivalence: decoder sigma must be positive");

  const GaussianSpec prior = GaussianSpec::standard(d);
  const Eigen::VectorXd sd = q.cov.diagonal().cwiseSqrt();
  Rng rng(in.seed);
  Running lhs, rhs, kl_z, recon;
  double gap = 0.0;
  Eigen::VectorXd y(d);
  for (std::size_t i = 0; i < in.n_mc; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) y(k) = q.mean(k) + sd(k) * rng.normal();
    const Eigen::VectorXd z = in.map.forward(y);
    const double log_lik = in.decoder.log_likelihood(in.x, z);
    const double ratio_y = q.log_density(y) - prior.log_density(y);
    const double ratio_z = pushforward_log_density(q, in.map, z) - pushforward_log_density(prior, in.map, z);
    if (!std::isfinite(log_lik) || !std::isfinite(ratio_y) || !std::isfinite(ratio_z)) {
      throw NumericError("check_elbo_equivalence: non-finite integrand at sample " + std::to_string(i));
    }
    lhs.add(log_lik - ratio_y);
    rhs.add(log_lik - ratio_z);
    kl_z.add(ratio_z);
    recon.add(log_lik);
    gap = std::max(gap, std::fabs(ratio_y - ratio_z));
  }
  ElboEquivalence out;
  out.lhs = lhs.mean;
  out.rhs = rhs.mean;
  out.delta = std::fabs(lhs.mean - rhs.mean);
  out.stderr_ = std::hypot(lhs.stderr_(), rhs.stderr_());
  out.kl_y = kl_gaussian(q, prior);
  out.lhs_analytic = recon.mean - out.kl_y;
  out.kl_z = kl_z.mean;
  out.kl_z_stderr = kl_z.stderr_();
  out.max_sample_gap = gap;
  out.passed = out.delta <= 3.0 * out.stderr_ && std::fabs(out.kl_y - out.kl_z) <= 3.0 * out.kl_z_stderr;
  return out;
}

}  // namespace intel_latent::divergence

namespace intel_latent::divergence {

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

GaussianSpec random_gaussian(Rng& rng, Eigen::Index dim) {
  const Eigen::MatrixXd m = random_matrix(rng, dim, dim);
  Eigen::MatrixXd cov = m * m.transpose() / static_cast<double>(dim) +
                        0.5 * Eigen::MatrixXd::Identity(dim, dim);
  return {random_matrix(rng, dim, 1).col(0), cov};
}

}  // namespace

SweepSummary affine_invariance_sweep(std::size_t pairs, Eigen::Index dim, std::uint64_t seed) {
  Rng rng(seed);
  SweepSummary s;
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto q = random_gaussian(rng, dim);
    const auto p = random_gaussian(rng, dim);
    Eigen::MatrixXd a = random_matrix(rng, dim, dim);
    while (std::fabs(a.fullPivLu().determinant()) < 0.1) a = random_matrix(rng, dim, dim);
    const Eigen::VectorXd b = random_matrix(rng, dim, 1).col(0);
    s.max_delta = std::max(s.max_delta, check_affine_invariance(q, p, a, b).delta);
    ++s.cases;
  }
  s.passed = s.max_delta < 1e-9;
  return s;
}

SweepSummary marginal_inequality_sweep(std::size_t cases, std::uint64_t seed) {
  Rng rng(seed);
  SweepSummary s;
  for (std::size_t i = 0; i < cases; ++i) {
    const auto dim = static_cast<Eigen::Index>(2 + rng.index(5));
    Eigen::VectorXd mean(dim), var(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
      // Some coordinates are exactly standard so equality cases occur.
      const bool standard = rng.uniform() < 0.25;
      mean(k) = standard ? 0.0 : 2.0 * rng.normal();
      var(k) = standard ? 1.0 : std::exp(rng.uniform(-2.0, 2.0));
    }
    std::vector<std::size_t> keep;
    while (keep.empty() || keep.size() == static_cast<std::size_t>(dim)) {
      keep.clear();
      for (Eigen::Index k = 0; k < dim; ++k) {
        if (rng.uniform() < 0.5) keep.push_back(static_cast<std::size_t>(k));
      }
    }
    const auto r = check_marginal_inequality(GaussianSpec::diagonal(mean, var), keep);
    ++s.cases;
    if (!r.holds) ++s.violations;
    if (r.dropped_kl > 1e-6) {
      ++s.strict_expected;
      if (!r.strict) ++s.strict_missed;
    }
  }
  s.passed = s.violations == 0 && s.strict_missed == 0;
  return s;
}

ElboEquivalenceInput toy_elbo_instance(double a, std::size_t n_mc, std::uint64_t seed) {
  ElboEquivalenceInput in;
  in.posterior = GaussianSpec::diagonal(Eigen::VectorXd::Constant(1, 0.7), Eigen::VectorXd::Constant(1, 0.36));
  in.map = InvertibleTestMap::elementwise(a);
  in.decoder.w = Eigen::MatrixXd::Constant(1, 1, 1.5);
  in.decoder.c = Eigen::VectorXd::Constant(1, 0.2);
  in.decoder.sigma = 0.5;
  in.x = Eigen::VectorXd::Constant(1, 1.0);
  in.n_mc = n_mc;
  in.seed = seed;
  return in;
}

}  // namespace intel_latent::divergence
