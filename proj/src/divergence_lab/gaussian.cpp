#include <cmath>
#include <numbers>
#include <stdexcept>

#include "intel_latent/divergence.hpp"

namespace intel_latent::divergence {

namespace {

Eigen::LLT<Eigen::MatrixXd> cholesky(const Eigen::MatrixXd& cov, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument(std::string(what) + ": covariance is not positive definite");
  }
  return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

GaussianSpec GaussianSpec::diagonal(const Eigen::VectorXd& mean, const Eigen::VectorXd& variances) {
  return {mean, variances.asDiagonal().toDenseMatrix()};
}

GaussianSpec GaussianSpec::standard(Eigen::Index dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Identity(dim, dim)};
}

bool GaussianSpec::is_diagonal() const {
  return (cov - Eigen::MatrixXd(cov.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
}

void GaussianSpec::validate() const {
  if (mean.size() == 0) throw std::invalid_argument("gaussian: empty mean");
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw std::invalid_argument("gaussian: covariance must be " + std::to_string(mean.size()) + " x " +
                                std::to_string(mean.size()));
  }
  if (!cov.isApprox(cov.transpose(), 1e-12)) throw std::invalid_argument("gaussian: covariance is not symmetric");
  cholesky(cov, "gaussian");
}

double GaussianSpec::log_density(const Eigen::VectorXd& y) const {
  const auto llt = cholesky(cov, "gaussian");
  const Eigen::VectorXd u = llt.matrixL().solve(y - mean);
  const double d = static_cast<double>(mean.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det(llt) + u.squaredNorm());
}

double kl_gaussian(const GaussianSpec& q, const GaussianSpec& p) {
  q.validate();
  p.validate();
  if (q.dim() != p.dim()) throw std::invalid_argument("kl_gaussian: dimension mismatch");
  const auto lq = cholesky(q.cov, "kl_gaussian q");
  const auto lp = cholesky(p.cov, "kl_gaussian p");
  const Eigen::MatrixXd lq_dense = lq.matrixL();
  // tr(Sp^-1 Sq) = ||Lp^-1 Lq||_F^2
  const Eigen::MatrixXd m = lp.matrixL().solve(lq_dense);
  const Eigen::VectorXd u = lp.matrixL().solve(p.mean - q.mean);
  const double d = static_cast<double>(q.dim());
  return 0.5 * (m.squaredNorm() + u.squaredNorm() - d + log_det(lp) - log_det(lq));
}

}  // namespace intel_latent::divergence
