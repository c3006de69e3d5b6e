#include "intel_latent/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace intel_latent::diff {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + std::string(name) +
                              "' (expected relu, tanh, sigmoid or identity)");
}

std::string Mlp::weight_name(std::size_t layer) const {
  return prefix + ".W" + std::to_string(layer);
}

std::string Mlp::bias_name(std::size_t layer) const {
  return prefix + ".b" + std::to_string(layer);
}

void Mlp::validate() const {
  if (activations.empty()) throw std::invalid_argument("mlp '" + prefix + "' has no layers");
  if (dims.size() != activations.size() + 1) {
    throw std::invalid_argument("mlp '" + prefix + "': " + std::to_string(dims.size()) +
                                " dims for " + std::to_string(activations.size()) + " layers");
  }
  for (auto d : dims) {
    if (d == 0) throw std::invalid_argument("mlp '" + prefix + "': zero-width layer");
  }
}

void Mlp::initialize(NamedTensors& store, Rng& rng) const {
  validate();
  for (std::size_t l = 0; l < layers(); ++l) {
    const std::size_t in = dims[l], out = dims[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Tensor w({in, out});
    for (auto& v : w.data()) v = rng.uniform(-limit, limit);
    store.insert_or_assign(weight_name(l), std::move(w));
    store.insert_or_assign(bias_name(l), Tensor({out}, 0.0));
  }
}

Node Mlp::build(Tape& tape, Node x) const {
  validate();
  Node h = x;
  for (std::size_t l = 0; l < layers(); ++l) {
    h = matmul(h, tape.parameter(weight_name(l))) + tape.parameter(bias_name(l));
    switch (activations[l]) {
      case Activation::relu: h = relu(h); break;
      case Activation::tanh: h = tanh(h); break;
      case Activation::sigmoid: h = sigmoid(h); break;
      case Activation::identity: break;
    }
  }
  return h;
}

Tensor Mlp::apply(const NamedTensors& store, const Tensor& x) const {
  Tape tape;
  Node in = tape.input("x", {});
  Node out = build(tape, in);
  NamedTensors inputs{{"x", x}};
  return tape.forward(store, inputs, out);
}

Mlp make_mlp(std::string prefix, std::size_t in, const std::vector<std::size_t>& hidden,
             std::size_t out, Activation hidden_act, Activation output_act) {
  Mlp mlp;
  mlp.prefix = std::move(prefix);
  mlp.dims.push_back(in);
  for (auto h : hidden) {
    mlp.dims.push_back(h);
    mlp.activations.push_back(hidden_act);
  }
  mlp.dims.push_back(out);
  mlp.activations.push_back(output_act);
  mlp.validate();
  return mlp;
}

}  // namespace intel_latent::diff
