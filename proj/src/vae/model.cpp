#include <cmath>
#include <stdexcept>

#include "intel_latent/errors.hpp"
#include "intel_latent/vae.hpp"

namespace intel_latent::vae {

std::string_view to_string(Likelihood l) {
  return l == Likelihood::gaussian ? "gaussian" : "bernoulli";
}

Likelihood likelihood_from_string(std::string_view s) {
  if (s == "gaussian") return Likelihood::gaussian;
  if (s == "bernoulli") return Likelihood::bernoulli;
  throw std::invalid_argument("unknown likelihood '" + std::string(s) + "' (expected gaussian or bernoulli)");
}

std::string_view to_string(PenaltyOrientation o) {
  return o == PenaltyOrientation::diversity ? "diversity" : "printed";
}

PenaltyOrientation orientation_from_string(std::string_view s) {
  if (s == "diversity") return PenaltyOrientation::diversity;
  if (s == "printed") return PenaltyOrientation::printed;
  throw std::invalid_argument("unknown penalty orientation '" + std::string(s) +
                              "' (expected diversity or printed)");
}

void ModelConfig::validate() const {
  if (dim_x == 0 || dim_y == 0) throw std::invalid_argument("model: dim_x and dim_y must be positive");
  if (!(sigma_x > 0.0)) throw std::invalid_argument("model: sigma_x must be positive");
  mapping.validate(dim_y);
}

VaeModel make_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  VaeModel model;
  model.config = config;
  model.encoder = diff::make_mlp("encoder", config.dim_x, config.encoder_hidden, 2 * config.dim_y);
  model.decoder = diff::make_mlp("decoder", config.dim_y, config.decoder_hidden, config.dim_x);
  Rng rng(seed);
  model.encoder.initialize(model.params, rng);
  model.decoder.initialize(model.params, rng);
  mappings::initialize_mapping(config.mapping, model.params, rng);
  return model;
}

namespace {

Tensor as_batch(const Tensor& t, std::size_t cols, std::string_view what) {
  const Tensor b = t.rank() == 1 ? t.reshaped({1, t.size()}) : t;
  if (b.rank() != 2 || b.shape()[1] != cols) {
    throw ShapeError(std::string(what) + " must have " + std::to_string(cols) + " columns, got " +
                     shape_string(t.shape()));
  }
  return b;
}

}  // namespace

GaussianPosterior encode(const VaeModel& model, const Tensor& x) {
  const Tensor batch = as_batch(x, model.config.dim_x, "x");
  diff::Tape tape;
  auto in = tape.input("x", {0, model.config.dim_x});
  auto enc = model.encoder.build(tape, in);
  const std::size_t dy = model.config.dim_y;
  auto mean = diff::slice(enc, 1, 0, dy);
  auto log_std = diff::clamp(diff::slice(enc, 1, dy, 2 * dy), kLogStdMin, kLogStdMax);
  tape.forward(model.params, NamedTensors{{"x", batch}}, log_std);
  return {tape.value(mean), tape.value(log_std)};
}

Tensor reparameterize(const GaussianPosterior& posterior, const Tensor& noise) {
  if (noise.shape() != posterior.mean.shape() || posterior.log_std.shape() != posterior.mean.shape()) {
    throw ShapeError("reparameterize: noise " + shape_string(noise.shape()) + " vs mean " +
                     shape_string(posterior.mean.shape()));
  }
  Tensor y(noise.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = posterior.mean[i] + std::exp(posterior.log_std[i]) * noise[i];
  }
  return y;
}

Tensor gaussian_kl_rows(const GaussianPosterior& posterior) {
  const Tensor& m = posterior.mean;
  const Tensor& ls = posterior.log_std;
  if (m.shape() != ls.shape()) throw ShapeError("gaussian_kl: mean and log_std shapes differ");
  const std::size_t rows = m.rows(), cols = m.cols();
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double mu = m[r * cols + c], l = ls[r * cols + c];
      acc += mu * mu + std::exp(2.0 * l) - 1.0 - 2.0 * l;
    }
    out[r] = 0.5 * acc;
  }
  return out;
}

double gaussian_kl(const GaussianPosterior& posterior) {
  const Tensor rows = gaussian_kl_rows(posterior);
  double total = 0.0;
  for (double v : rows.data()) total += v;
  return total / static_cast<double>(rows.size());
}

}  // namespace intel_latent::vae
