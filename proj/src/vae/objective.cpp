#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "intel_latent/errors.hpp"
#include "intel_latent/vae.hpp"

namespace intel_latent::vae {

using diff::Node;
using diff::Tape;

namespace {

void check_binary_range(const Tensor& x) {
  for (double v : x.data()) {
    if (v < 0.0 || v > 1.0) {
      throw std::invalid_argument("Bernoulli likelihood needs data in [0, 1], found " + std::to_string(v));
    }
  }
}

Tensor as_batch(const Tensor& t, std::size_t cols, std::string_view what) {
  const Tensor b = t.rank() == 1 ? t.reshaped({1, t.size()}) : t;
  if (b.rank() != 2 || b.shape()[1] != cols) {
    throw ShapeError(std::string(what) + " must have " + std::to_string(cols) + " columns, got " +
                     shape_string(t.shape()));
  }
  return b;
}

// log p(x | z) per row, batch x 1.
Node build_recon_rows(const VaeModel& model, Node x, Node z) {
  Node out = model.decoder.build(*z.tape, z);
  const auto& cfg = model.config;
  if (cfg.likelihood == Likelihood::gaussian) {
    const double var = cfg.sigma_x * cfg.sigma_x;
    const double log_norm = -0.5 * static_cast<double>(cfg.dim_x) * std::log(2.0 * std::numbers::pi * var);
    Node diff = x - out;
    return add_scalar(scale(diff::sum(diff * diff, 1), -0.5 / var), log_norm);
  }
  Node p = diff::clamp(diff::sigmoid(out), kProbabilityClamp, 1.0 - kProbabilityClamp);
  Node one_minus_p = add_scalar(-p, 1.0);
  Node one_minus_x = add_scalar(-x, 1.0);
  return diff::sum(x * diff::log(p) + one_minus_x * diff::log(one_minus_p), 1);
}

}  // namespace

Node build_sparsity_penalty(Node gates, PenaltyOrientation orientation) {
  auto entropy = [](Node v, int axis) {
    Node p = v / diff::sum(v, axis);
    return -diff::sum(p * diff::log(p), axis);
  };
  Node g = diff::clamp(gates, kGateClamp, std::numeric_limits<double>::max());
  Node per_sample = diff::mean(entropy(g, 1));
  Node batch = entropy(diff::mean(g, 0), 1);
  Node penalty = orientation == PenaltyOrientation::diversity ? batch - per_sample : per_sample - batch;
  return diff::sum(penalty);
}

VaeGraph::VaeGraph(const VaeModel& model, const ObjectiveOptions& options) {
  const auto& cfg = model.config;
  x = tape_.input("x", {0, cfg.dim_x});
  noise = tape_.input("noise", {0, cfg.dim_y});
  Node enc = model.encoder.build(tape_, x);
  mean = diff::slice(enc, 1, 0, cfg.dim_y);
  log_std = diff::clamp(diff::slice(enc, 1, cfg.dim_y, 2 * cfg.dim_y), kLogStdMin, kLogStdMax);
  tape_.label(mean, "posterior_mean");
  tape_.label(log_std, "posterior_log_std");
  y = mean + diff::exp(log_std) * noise;
  tape_.label(y, "y");

  const auto mapped = mappings::build_mapping(tape_, cfg.mapping, y);
  z = mapped.z;
  gates = mapped.gates;
  tape_.label(z, "z");

  recon_rows = build_recon_rows(model, x, z);
  kl_rows = scale(diff::sum(mean * mean + diff::exp(scale(log_std, 2.0)) - scale(log_std, 2.0), 1), 0.5);
  kl_rows = add_scalar(kl_rows, -0.5 * static_cast<double>(cfg.dim_y));
  recon = diff::mean(recon_rows);
  kl = diff::mean(kl_rows);
  elbo = recon - scale(kl, options.beta_kl);
  tape_.label(elbo, "elbo");

  // Without a dimension selector the penalty acts on |z|.
  penalty_gates = gates ? *gates : diff::abs(z);
  if (gates || options.gamma != 0.0) {
    penalty = build_sparsity_penalty(penalty_gates, options.orientation);
  } else {
    penalty = tape_.constant(Tensor::scalar(0.0), "no_penalty");
  }
  Node objective = options.gamma != 0.0 ? elbo + scale(penalty, options.gamma) : elbo;
  loss = -objective;
  tape_.label(loss, "loss");
}

double recon_log_likelihood(const VaeModel& model, const Tensor& x, const Tensor& z) {
  const auto& cfg = model.config;
  const Tensor xb = as_batch(x, cfg.dim_x, "x");
  const Tensor zb = as_batch(z, cfg.dim_y, "z");
  if (xb.shape()[0] != zb.shape()[0]) throw ShapeError("recon_log_likelihood: x and z row counts differ");
  if (cfg.likelihood == Likelihood::bernoulli) check_binary_range(xb);
  Tape tape;
  Node xn = tape.input("x", {0, cfg.dim_x});
  Node zn = tape.input("z", {0, cfg.dim_y});
  Node r = diff::mean(build_recon_rows(model, xn, zn));
  return tape.forward(model.params, NamedTensors{{"x", xb}, {"z", zb}}, r).item();
}

ElboParts elbo_y(const VaeModel& model, const Tensor& x, const Tensor& noise, double beta_kl) {
  const auto& cfg = model.config;
  const Tensor xb = as_batch(x, cfg.dim_x, "x");
  const Tensor nb = as_batch(noise, cfg.dim_y, "noise");
  if (cfg.likelihood == Likelihood::bernoulli) check_binary_range(xb);
  VaeGraph graph(model, ObjectiveOptions{beta_kl, 0.0, PenaltyOrientation::diversity});
  graph.tape().forward(model.params, NamedTensors{{"x", xb}, {"noise", nb}}, graph.elbo);
  return {graph.tape().value(graph.elbo).item(), graph.tape().value(graph.recon).item(),
          graph.tape().value(graph.kl).item()};
}

double sparsity_penalty(const std::vector<Tensor>& gates, PenaltyOrientation orientation) {
  if (gates.size() < 2) throw std::invalid_argument("sparsity_penalty needs at least 2 gate vectors");
  const std::size_t d = gates.front().size();
  std::vector<double> data;
  data.reserve(gates.size() * d);
  for (const auto& g : gates) {
    if (g.size() != d) throw ShapeError("sparsity_penalty: gate vectors differ in length");
    data.insert(data.end(), g.data().begin(), g.data().end());
  }
  Tape tape;
  Node in = tape.input("gates", {0, d});
  Node p = build_sparsity_penalty(in, orientation);
  return tape.forward(NamedTensors{{"gates", Tensor({gates.size(), d}, std::move(data))}}, p).item();
}

Generated generate(const VaeModel& model, std::size_t n, std::uint64_t seed) {
  const auto& cfg = model.config;
  if (n == 0) throw std::invalid_argument("generate: n must be positive");
  Rng rng(seed);
  Tensor y({n, cfg.dim_y});
  for (auto& v : y.data()) v = rng.normal();
  Tape tape;
  Node yn = tape.input("y", {0, cfg.dim_y});
  Node z = mappings::build_mapping(tape, cfg.mapping, yn).z;
  Node out = model.decoder.build(tape, z);
  if (cfg.likelihood == Likelihood::bernoulli) out = diff::sigmoid(out);
  tape.forward(model.params, NamedTensors{{"y", y}}, out);
  return {tape.value(out), tape.value(z)};
}

Tensor represent(const VaeModel& model, const Tensor& x) {
  const auto& cfg = model.config;
  const Tensor xb = as_batch(x, cfg.dim_x, "x");
  Tape tape;
  Node xn = tape.input("x", {0, cfg.dim_x});
  Node mean = diff::slice(model.encoder.build(tape, xn), 1, 0, cfg.dim_y);
  Node z = mappings::build_mapping(tape, cfg.mapping, mean).z;
  return tape.forward(model.params, NamedTensors{{"x", xb}}, z);
}

double mean_reconstruction(const VaeModel& model, const Tensor& x) {
  return recon_log_likelihood(model, x, represent(model, x));
}

}  // namespace intel_latent::vae
