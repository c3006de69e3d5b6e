#include "intel_latent/tape.hpp"

#include <utility>

#include "intel_latent/errors.hpp"

namespace intel_latent::diff {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::input: return "input";
    case OpKind::parameter: return "parameter";
    case OpKind::constant: return "constant";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::neg: return "neg";
    case OpKind::scale: return "scale";
    case OpKind::add_scalar: return "add_scalar";
    case OpKind::pow_scalar: return "pow";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::tanh: return "tanh";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::relu: return "relu";
    case OpKind::abs: return "abs";
    case OpKind::sqrt: return "sqrt";
    case OpKind::clamp: return "clamp";
    case OpKind::matmul: return "matmul";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::l2norm: return "l2norm";
    case OpKind::softmax: return "softmax";
    case OpKind::custom: return "custom";
  }
  return "?";
}

Node Tape::push(NodeRecord record) {
  for (auto in : record.inputs) {
    if (in >= nodes_.size()) throw std::logic_error("node input refers to a later node");
  }
  nodes_.push_back(std::move(record));
  forward_done_ = false;
  return Node{this, nodes_.size() - 1};
}

Node Tape::input(std::string name, Shape pattern) {
  NodeRecord rec;
  rec.kind = OpKind::input;
  rec.label = std::move(name);
  rec.declared_shape = std::move(pattern);
  return push(std::move(rec));
}

Node Tape::parameter(std::string name) {
  NodeRecord rec;
  rec.kind = OpKind::parameter;
  rec.label = std::move(name);
  return push(std::move(rec));
}

Node Tape::constant(Tensor value, std::string label) {
  NodeRecord rec;
  rec.kind = OpKind::constant;
  rec.constant = std::move(value);
  rec.label = std::move(label);
  return push(std::move(rec));
}

Node& Tape::label(Node& node, std::string text) {
  nodes_.at(node.id).label = std::move(text);
  return node;
}

std::string Tape::describe(std::size_t id) const {
  const auto& rec = nodes_.at(id);
  std::string out = "node #" + std::to_string(id) + " (" + std::string(rec.kind == OpKind::custom && rec.custom
                                                                           ? rec.custom->name()
                                                                           : op_name(rec.kind));
  if (!rec.label.empty()) out += " '" + rec.label + "'";
  return out + ")";
}

std::vector<std::string> Tape::leaf_names() const {
  std::vector<std::string> names;
  for (const auto& rec : nodes_) {
    if (rec.kind == OpKind::input || rec.kind == OpKind::parameter) names.push_back(rec.label);
  }
  return names;
}

const Tensor& Tape::forward(const NamedTensors& bindings, Node output) {
  return run(&bindings, nullptr, output);
}

const Tensor& Tape::forward(const NamedTensors& params, const NamedTensors& inputs, Node output) {
  return run(&params, &inputs, output);
}

namespace {

bool matches_pattern(const Shape& pattern, const Shape& actual) {
  if (pattern.empty()) return true;
  if (pattern.size() != actual.size()) return false;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] != 0 && pattern[i] != actual[i]) return false;
  }
  return true;
}

}  // namespace

const Tensor& Tape::run(const NamedTensors* a, const NamedTensors* b, Node output) {
  if (output.tape != this || output.id >= nodes_.size()) {
    throw std::invalid_argument("forward: output node does not belong to this tape");
  }
  forward_done_ = false;
  values_.resize(nodes_.size());
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const auto& rec = nodes_[id];
    if (rec.kind == OpKind::input || rec.kind == OpKind::parameter) {
      const Tensor* bound = nullptr;
      if (a != nullptr) {
        if (auto it = a->find(rec.label); it != a->end()) bound = &it->second;
      }
      if (bound == nullptr && b != nullptr) {
        if (auto it = b->find(rec.label); it != b->end()) bound = &it->second;
      }
      if (bound == nullptr) throw std::invalid_argument(describe(id) + ": no binding supplied");
      if (rec.kind == OpKind::input && !matches_pattern(rec.declared_shape, bound->shape())) {
        throw ShapeError(describe(id) + ": bound shape " + shape_string(bound->shape()) +
                         " does not match declared " + shape_string(rec.declared_shape));
      }
      if (!bound->all_finite()) throw NumericError(describe(id) + ": binding contains NaN/Inf");
      values_[id] = *bound;
      continue;
    }
    if (rec.kind == OpKind::constant) {
      values_[id] = rec.constant;
      continue;
    }
    try {
      values_[id] = evaluate(id, rec);
    } catch (const ShapeError& e) {
      throw ShapeError(describe(id) + ": " + e.what());
    }
    if (!values_[id].all_finite()) {
      throw NumericError(describe(id) + ": produced a non-finite value");
    }
  }
  output_ = output.id;
  forward_done_ = true;
  return values_[output_];
}

const Tensor& Tape::value(Node node) const {
  if (!forward_done_) throw std::logic_error("value() requested before forward()");
  return values_.at(node.id);
}

void Tape::accumulate(std::size_t id, const Tensor& grad) {
  if (!has_grad_[id]) {
    grads_[id] = grad;
    has_grad_[id] = true;
    return;
  }
  auto dst = grads_[id].data();
  auto src = grad.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

NamedTensors Tape::backward(const Tensor& seed) {
  if (!forward_done_) throw std::logic_error("backward() called before forward()");
  const Tensor& out = values_[output_];
  if (seed.shape() != out.shape()) {
    throw ShapeError("backward seed shape " + shape_string(seed.shape()) +
                     " does not match output shape " + shape_string(out.shape()));
  }
  grads_.assign(nodes_.size(), Tensor{});
  has_grad_.assign(nodes_.size(), false);
  accumulate(output_, seed);
  for (std::size_t id = output_ + 1; id-- > 0;) {
    if (!has_grad_[id]) continue;
    const auto& rec = nodes_[id];
    if (rec.kind == OpKind::input || rec.kind == OpKind::parameter ||
        rec.kind == OpKind::constant) {
      continue;
    }
    propagate(id, rec, grads_[id]);
  }
  NamedTensors result;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const auto& rec = nodes_[id];
    if (rec.kind != OpKind::input && rec.kind != OpKind::parameter) continue;
    const Tensor grad = has_grad_[id] ? grads_[id] : Tensor(values_[id].shape(), 0.0);
    auto [it, inserted] = result.try_emplace(rec.label, grad);
    if (!inserted && has_grad_[id]) {
      auto dst = it->second.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += grad[i];
    }
  }
  return result;
}

NamedTensors Tape::backward() {
  if (!forward_done_) throw std::logic_error("backward() called before forward()");
  const Tensor& out = values_[output_];
  if (out.size() != 1) {
    throw ShapeError("backward() without a seed needs a scalar output, got " +
                     shape_string(out.shape()));
  }
  return backward(Tensor(out.shape(), 1.0));
}

}  // namespace intel_latent::diff
