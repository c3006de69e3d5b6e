#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "intel_latent/rng.hpp"
#include "intel_latent/tape.hpp"

namespace intel_latent::diff {

enum class Activation { relu, tanh, sigmoid, identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

/// Fully connected network layout. Weights live in a NamedTensors store
/// under `prefix`: `<prefix>.W<i>` (in x out) and `<prefix>.b<i>` (out).
struct Mlp {
  std::string prefix;
  std::vector<std::size_t> dims;          // dims.size() == layers + 1
  std::vector<Activation> activations;    // one per layer

  std::size_t layers() const { return activations.size(); }
  std::size_t input_dim() const { return dims.front(); }
  std::size_t output_dim() const { return dims.back(); }

  std::string weight_name(std::size_t layer) const;
  std::string bias_name(std::size_t layer) const;

  /// Throws std::invalid_argument when dims and activations do not chain.
  void validate() const;

  /// Add freshly initialised weights to `store` (Glorot-uniform weights,
  /// zero biases).
  void initialize(NamedTensors& store, Rng& rng) const;

  /// Record the network on `tape`, applied row-wise to `x` (batch x in).
  Node build(Tape& tape, Node x) const;

  /// Evaluate on concrete values (builds a private tape).
  Tensor apply(const NamedTensors& store, const Tensor& x) const;
};

/// `in -> hidden... -> out`, `hidden_act` on hidden layers, `output_act` last.
Mlp make_mlp(std::string prefix, std::size_t in, const std::vector<std::size_t>& hidden,
             std::size_t out, Activation hidden_act = Activation::relu,
             Activation output_act = Activation::identity);

}  // namespace intel_latent::diff
