#pragma once

// Define-then-run reverse-mode differentiation.
//
// A Tape records a graph of primitive operations over named leaves. Leaves
// are either inputs (declared with a shape pattern, 0 = any extent) or
// parameters (shape taken from the binding). `forward` evaluates every node
// in recording order against a set of named bindings and keeps the values;
// `backward` sweeps the recorded nodes once in reverse and returns the
// gradient of `seed . output` with respect to every named leaf.
//
// The same Tape can be re-run with different bindings (for example, a new
// minibatch of a different size). Recording order is topological by
// construction, since a node can only consume nodes that already exist.

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "intel_latent/tensor.hpp"

namespace intel_latent::diff {

/// Ordered name -> tensor map. Iteration order is lexicographic, which is
/// the fixed key order used for checkpoints and optimizer state.
using NamedTensors = std::map<std::string, Tensor, std::less<>>;

class Tape;

/// Handle to a node on a particular tape.
struct Node {
  Tape* tape = nullptr;
  std::size_t id = 0;
};

enum class OpKind {
  input,
  parameter,
  constant,
  add,
  sub,
  mul,
  div,
  neg,
  scale,
  add_scalar,
  pow_scalar,
  exp,
  log,
  tanh,
  sigmoid,
  relu,
  abs,
  sqrt,
  clamp,
  matmul,
  sum,
  mean,
  concat,
  slice,
  l2norm,
  softmax,
  custom,
};

std::string_view op_name(OpKind kind);

/// Operation with a hand-written vector-Jacobian product. Implementations
/// must be stateless: `backward` receives the same inputs and the output
/// that `forward` produced.
class CustomOp {
 public:
  virtual ~CustomOp() = default;
  virtual std::string_view name() const = 0;
  virtual Tensor forward(std::span<const Tensor* const> inputs) const = 0;
  /// One gradient per input, each shaped like that input.
  virtual std::vector<Tensor> backward(std::span<const Tensor* const> inputs,
                                       const Tensor& output, const Tensor& grad_output) const = 0;
};

struct NodeRecord {
  OpKind kind = OpKind::constant;
  std::vector<std::size_t> inputs;
  std::string label;
  Shape declared_shape;  // inputs: pattern, 0 = any extent
  Tensor constant;       // constants only
  double p0 = 0.0;       // scale / exponent / addend / clamp low
  double p1 = 0.0;       // clamp high
  int axis = -1;         // reductions, concat, slice, norm, softmax
  std::size_t begin = 0, end = 0;
  std::shared_ptr<const CustomOp> custom;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  Node input(std::string name, Shape pattern);
  Node parameter(std::string name);
  Node constant(Tensor value, std::string label = {});

  /// Attach a diagnostic label to a node (used in error messages).
  Node& label(Node& node, std::string text);

  /// Evaluate every node. `bindings` must hold every input and parameter
  /// name. Throws ShapeError / NumericError naming the offending node.
  const Tensor& forward(const NamedTensors& bindings, Node output);

  /// Same, with parameters and per-call inputs in two maps (a name may
  /// appear in either).
  const Tensor& forward(const NamedTensors& params, const NamedTensors& inputs, Node output);

  /// Gradient of dot(seed, output) for every named leaf reached from the
  /// output. Leaves the output does not depend on get zero gradients.
  NamedTensors backward(const Tensor& seed);

  /// backward with a seed of ones; output must have size 1.
  NamedTensors backward();

  const Tensor& value(Node node) const;
  bool has_forward() const noexcept { return forward_done_; }

  std::size_t size() const noexcept { return nodes_.size(); }
  const NodeRecord& record(std::size_t id) const { return nodes_.at(id); }
  /// Names of all leaves, in recording order.
  std::vector<std::string> leaf_names() const;

  // Recording entry point used by the op builders.
  Node push(NodeRecord record);

  std::string describe(std::size_t id) const;

 private:
  const Tensor& run(const NamedTensors* a, const NamedTensors* b, Node output);
  Tensor evaluate(std::size_t id, const NodeRecord& rec);
  void propagate(std::size_t id, const NodeRecord& rec, const Tensor& grad);
  void accumulate(std::size_t id, const Tensor& grad);

  std::vector<NodeRecord> nodes_;
  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
  std::vector<bool> has_grad_;
  std::size_t output_ = 0;
  bool forward_done_ = false;
};

// ---- Primitive builders --------------------------------------------------
//
// Binary elementwise ops broadcast rank-1/rank-2 operands: each matrix
// extent must match or be 1 (rank-1 of length n is a 1 x n row).

Node add(Node a, Node b);
Node sub(Node a, Node b);
Node mul(Node a, Node b);
Node div(Node a, Node b);
Node neg(Node a);
Node scale(Node a, double factor);
Node add_scalar(Node a, double addend);
/// Elementwise a^exponent for a constant exponent.
Node pow(Node a, double exponent);
Node exp(Node a);
Node log(Node a);
Node tanh(Node a);
Node sigmoid(Node a);
/// Subgradient at 0 is 0.
Node relu(Node a);
/// Subgradient at 0 is 0.
Node abs(Node a);
/// Gradient at 0 is taken as 0.
Node sqrt(Node a);
/// Gradient passes inside [low, high], zero outside.
Node clamp(Node a, double low, double high);
/// Matrix product; rank-1 operands follow the usual vector conventions.
Node matmul(Node a, Node b);
/// axis -1: all entries -> {1}; axis 0 -> 1 x cols; axis 1 -> rows x 1.
Node sum(Node a, int axis = -1);
Node mean(Node a, int axis = -1);
/// rank-2 operands join along axis 0 or 1; rank-1 along their only axis.
Node concat(std::span<const Node> parts, int axis);
Node slice(Node a, int axis, std::size_t begin, std::size_t end);
/// Euclidean norm; axis semantics as in `sum`. Gradient at 0 is 0.
Node l2norm(Node a, int axis = -1);
/// Softmax along axis (rank-1: the whole vector).
Node softmax(Node a, int axis = -1);
Node custom(std::shared_ptr<const CustomOp> op, std::span<const Node> inputs);

inline Node operator+(Node a, Node b) { return add(a, b); }
inline Node operator-(Node a, Node b) { return sub(a, b); }
inline Node operator*(Node a, Node b) { return mul(a, b); }
inline Node operator/(Node a, Node b) { return div(a, b); }
inline Node operator-(Node a) { return neg(a); }

}  // namespace intel_latent::diff
