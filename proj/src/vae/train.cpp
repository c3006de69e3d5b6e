#include <chrono>
#include <numeric>
#include <stdexcept>
#include <string>

#include "intel_latent/adam.hpp"
#include "intel_latent/errors.hpp"
#include "intel_latent/vae.hpp"

namespace intel_latent::vae {

TrainReport train(VaeModel& model, const Tensor& data, const TrainConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const auto& mc = model.config;
  if (data.rank() != 2 || data.shape()[1] != mc.dim_x) {
    throw ShapeError("train: data must be n x " + std::to_string(mc.dim_x) + ", got " + shape_string(data.shape()));
  }
  if (config.batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
  if (!(config.lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
  const std::size_t n = data.shape()[0];
  const std::size_t dx = mc.dim_x, dy = mc.dim_y;
  if (mc.likelihood == Likelihood::bernoulli) {
    for (double v : data.data()) {
      if (v < 0.0 || v > 1.0) throw std::invalid_argument("train: Bernoulli likelihood needs data in [0, 1]");
    }
  }
  const bool penalised = config.objective.gamma != 0.0;
  if (penalised && (config.batch_size < 2 || n < 2)) {
    throw std::invalid_argument("train: the sparsity penalty needs batch_size >= 2 and at least 2 rows");
  }

  TrainReport report;
  VaeGraph graph(model, config.objective);
  diff::AdamState adam;
  adam.config.lr = config.lr;
  Rng rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    double sum_loss = 0.0, sum_kl = 0.0, sum_recon = 0.0, sum_reg = 0.0;
    for (std::size_t begin = 0, batch = 0; begin < n; begin += config.batch_size, ++batch) {
      std::size_t rows = std::min(config.batch_size, n - begin);
      // A trailing single row has no batch entropy; skip it.
      if (penalised && rows < 2) break;
      Tensor x({rows, dx});
      for (std::size_t r = 0; r < rows; ++r) {
        const auto src = order[begin + r];
        std::copy_n(data.raw() + src * dx, dx, x.raw() + r * dx);
      }
      Tensor noise({rows, dy});
      for (auto& v : noise.data()) v = rng.normal();
      try {
        auto& tape = graph.tape();
        tape.forward(model.params, NamedTensors{{"x", std::move(x)}, {"noise", std::move(noise)}}, graph.loss);
        const NamedTensors grads = tape.backward();
        diff::adam_step(adam, model.params, grads);
        const double w = static_cast<double>(rows);
        sum_loss += -tape.value(graph.elbo).item() * w;
        sum_kl += tape.value(graph.kl).item() * w;
        sum_recon += tape.value(graph.recon).item() * w;
        sum_reg += tape.value(graph.penalty).item() * w;
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch) + ": " + e.what());
      }
    }
    const double total = static_cast<double>(penalised && n % config.batch_size == 1 ? n - 1 : n);
    report.neg_elbo.push_back(sum_loss / total);
    report.kl.push_back(sum_kl / total);
    report.recon.push_back(sum_recon / total);
    report.regularizer.push_back(sum_reg / total);
  }
  report.final_params = model.params;
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace intel_latent::vae
