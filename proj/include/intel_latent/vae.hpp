#pragma once

// VAE with an intermediary Gaussian latent y and a structured mapping
// z = g(y) between the encoder and the decoder.
//
//   q(y | x) = N(mean(x), diag(exp(log_std(x))^2))    log_std clamped to [-6, 2]
//   y        = mean + exp(log_std) * noise              noise ~ N(0, I)
//   z        = g(y)
//   ELBO_Y   = log p(x | z) - beta * KL(q(y | x) || N(0, I))
//
// Training maximises the batch mean of ELBO_Y plus gamma times the sparsity
// penalty (see `sparsity_penalty`).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "intel_latent/mappings.hpp"
#include "intel_latent/mlp.hpp"
#include "intel_latent/tape.hpp"

namespace intel_latent::vae {

using diff::NamedTensors;

enum class Likelihood { gaussian, bernoulli };

/// Sign of the sparsity penalty added to the maximised objective:
///   diversity: H(batch-mean gates) - mean_i H(gates_i)   (default)
///   printed:   mean_i H(gates_i) - H(batch-mean gates)
enum class PenaltyOrientation { diversity, printed };

std::string_view to_string(Likelihood l);
Likelihood likelihood_from_string(std::string_view s);
std::string_view to_string(PenaltyOrientation o);
PenaltyOrientation orientation_from_string(std::string_view s);

inline constexpr double kLogStdMin = -6.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kProbabilityClamp = 1e-7;
inline constexpr double kGateClamp = 1e-7;

struct ModelConfig {
  std::size_t dim_x = 2;
  std::size_t dim_y = 2;
  std::vector<std::size_t> encoder_hidden{10, 10, 10};
  std::vector<std::size_t> decoder_hidden{10, 10, 10};
  Likelihood likelihood = Likelihood::gaussian;
  double sigma_x = 0.1;  // Gaussian likelihood scale
  mappings::MappingSpec mapping = mappings::identity_mapping();

  void validate() const;
};

struct VaeModel {
  ModelConfig config;
  diff::Mlp encoder;  // dim_x -> 2 dim_y (mean, log_std)
  diff::Mlp decoder;  // dim_y -> dim_x (means or logits)
  NamedTensors params;
};

/// Architecture from `config`, weights drawn from a seeded stream.
VaeModel make_model(const ModelConfig& config, std::uint64_t seed);

struct GaussianPosterior {
  Tensor mean;     // batch x dim_y
  Tensor log_std;  // batch x dim_y
};

GaussianPosterior encode(const VaeModel& model, const Tensor& x);
Tensor reparameterize(const GaussianPosterior& posterior, const Tensor& noise);
/// KL(q || N(0, I)) per row (shape {batch}).
Tensor gaussian_kl_rows(const GaussianPosterior& posterior);
/// Mean over rows of gaussian_kl_rows (the single KL for one row).
double gaussian_kl(const GaussianPosterior& posterior);

/// Mean over rows of log p(x | z).
double recon_log_likelihood(const VaeModel& model, const Tensor& x, const Tensor& z);

struct ElboParts {
  double elbo = 0.0;   // recon - beta * kl
  double recon = 0.0;
  double kl = 0.0;
};

/// Single-sample ELBO_Y, averaged over the rows of x.
ElboParts elbo_y(const VaeModel& model, const Tensor& x, const Tensor& noise, double beta_kl = 1.0);

/// Penalty over M >= 2 gate vectors, each entry clamped to [1e-7, inf).
/// H(v) is the entropy of v / ||v||_1.
double sparsity_penalty(const std::vector<Tensor>& gates,
                        PenaltyOrientation orientation = PenaltyOrientation::diversity);

struct Generated {
  Tensor samples;  // n x dim_x: decoder means (Gaussian) or probabilities (Bernoulli)
  Tensor latents;  // n x dim_y: z = g(y)
};

Generated generate(const VaeModel& model, std::size_t n, std::uint64_t seed);

/// z = g(mean(x)); no sampling.
Tensor represent(const VaeModel& model, const Tensor& x);

/// Mean log p(x | g(mean(x))): deterministic reconstruction quality.
double mean_reconstruction(const VaeModel& model, const Tensor& x);

// ---- Training --------------------------------------------------------------

struct ObjectiveOptions {
  double beta_kl = 1.0;
  double gamma = 0.0;
  PenaltyOrientation orientation = PenaltyOrientation::diversity;
};

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 100;
  double lr = 1e-3;
  ObjectiveOptions objective;
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> neg_elbo;      // per-epoch mean of -ELBO_Y
  std::vector<double> kl;            // per-epoch mean KL term
  std::vector<double> recon;         // per-epoch mean reconstruction term
  std::vector<double> regularizer;   // per-epoch mean sparsity penalty (unweighted)
  double wall_clock_seconds = 0.0;
  NamedTensors final_params;
};

/// Minibatch Adam on -(ELBO_Y + gamma * penalty). Deterministic given the
/// seed. Throws NumericError naming the epoch and batch on NaN/Inf.
TrainReport train(VaeModel& model, const Tensor& data, const TrainConfig& config);

// ---- Recorded objective -------------------------------------------------------

/// The full objective recorded once on a tape and re-run per minibatch.
/// Inputs: "x" (batch x dim_x), "noise" (batch x dim_y).
class VaeGraph {
 public:
  VaeGraph(const VaeModel& model, const ObjectiveOptions& options);

  diff::Tape& tape() { return tape_; }

  diff::Node x, noise, mean, log_std, y, z;
  std::optional<diff::Node> gates;    // sparse mapping: selector output
  diff::Node penalty_gates;           // what the sparsity penalty acts on
  diff::Node recon_rows, kl_rows;     // batch x 1
  diff::Node recon, kl, elbo;         // scalars (batch means)
  diff::Node penalty;                 // scalar
  diff::Node loss;                    // -(elbo + gamma * penalty)

 private:
  diff::Tape tape_;
};

/// Record the sparsity penalty of a batch of gate rows on a tape.
diff::Node build_sparsity_penalty(diff::Node gates, PenaltyOrientation orientation);

}  // namespace intel_latent::vae
