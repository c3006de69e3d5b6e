#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "intel_latent/errors.hpp"
#include "intel_latent/kernels.hpp"
#include "intel_latent/tape.hpp"

namespace intel_latent::diff {
namespace {

struct Dims {
  std::size_t rows;
  std::size_t cols;
};

Dims dims_of(const Tensor& t) {
  if (t.rank() > 2) throw ShapeError("operands must have rank 1 or 2, got " + shape_string(t.shape()));
  return {t.rows(), t.cols()};
}

std::size_t broadcast_extent(std::size_t a, std::size_t b) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  throw ShapeError("extents " + std::to_string(a) + " and " + std::to_string(b) +
                   " do not broadcast");
}

Shape broadcast_shape(const Tensor& a, const Tensor& b) {
  const Dims da = dims_of(a), db = dims_of(b);
  const std::size_t r = broadcast_extent(da.rows, db.rows);
  const std::size_t c = broadcast_extent(da.cols, db.cols);
  if (a.rank() == 1 && b.rank() == 1) return {c};
  return {r, c};
}

// out(i, j) = f(a(i', j'), b(i'', j'')) with broadcast indexing.
template <class F>
Tensor broadcast_map(const Tensor& a, const Tensor& b, F f) {
  Tensor out(broadcast_shape(a, b));
  const Dims da = dims_of(a), db = dims_of(b), dout = dims_of(out);
  for (std::size_t i = 0; i < dout.rows; ++i) {
    const std::size_t ia = da.rows == 1 ? 0 : i, ib = db.rows == 1 ? 0 : i;
    for (std::size_t j = 0; j < dout.cols; ++j) {
      const std::size_t ja = da.cols == 1 ? 0 : j, jb = db.cols == 1 ? 0 : j;
      out[i * dout.cols + j] = f(a[ia * da.cols + ja], b[ib * db.cols + jb]);
    }
  }
  return out;
}

// Sum a full-size gradient down to the (possibly broadcast) operand shape.
Tensor reduce_to(const Tensor& grad, const Tensor& like) {
  if (grad.shape() == like.shape()) return grad;
  Tensor out(like.shape(), 0.0);
  const Dims dg = dims_of(grad), dl = dims_of(like);
  for (std::size_t i = 0; i < dg.rows; ++i) {
    const std::size_t il = dl.rows == 1 ? 0 : i;
    for (std::size_t j = 0; j < dg.cols; ++j) {
      const std::size_t jl = dl.cols == 1 ? 0 : j;
      out[il * dl.cols + jl] += grad[i * dg.cols + j];
    }
  }
  return out;
}

template <class F>
Tensor unary_map(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

// grad_in[i] = grad[i] * f(a[i], out[i])
template <class F>
Tensor unary_grad(const Tensor& grad, const Tensor& a, const Tensor& out, F f) {
  Tensor g(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) g[i] = grad[i] * f(a[i], out[i]);
  return g;
}

// Axis-wise view over a rank-1/rank-2 tensor: `groups` independent lines
// of `len` elements each.
struct AxisView {
  std::size_t groups;
  std::size_t len;
  std::size_t cols;
  bool along_rows;  // reduce over rows (axis 0 of a rank-2 tensor)

  std::size_t at(std::size_t g, std::size_t i) const {
    return along_rows ? i * cols + g : g * cols + i;
  }
};

AxisView axis_view(const Tensor& t, int axis) {
  if (t.rank() > 2) throw ShapeError("axis ops need rank 1 or 2, got " + shape_string(t.shape()));
  if (axis == -1 || t.rank() == 1) {
    if (axis > 0) throw ShapeError("axis " + std::to_string(axis) + " out of range for rank 1");
    return {1, t.size(), t.size(), false};
  }
  const std::size_t r = t.shape()[0], c = t.shape()[1];
  if (axis == 0) return {c, r, c, true};
  if (axis == 1) return {r, c, c, false};
  throw ShapeError("axis " + std::to_string(axis) + " out of range");
}

Shape reduced_shape(const Tensor& t, int axis) {
  if (axis == -1 || t.rank() == 1) return {1};
  if (axis == 0) return {1, t.shape()[1]};
  return {t.shape()[0], 1};
}

Node unary(OpKind kind, Node a, double p0 = 0.0, double p1 = 0.0) {
  if (a.tape == nullptr) throw std::invalid_argument("op on a detached node");
  NodeRecord rec;
  rec.kind = kind;
  rec.inputs = {a.id};
  rec.p0 = p0;
  rec.p1 = p1;
  return a.tape->push(std::move(rec));
}

Node binary(OpKind kind, Node a, Node b) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw std::invalid_argument("binary op across different tapes");
  }
  NodeRecord rec;
  rec.kind = kind;
  rec.inputs = {a.id, b.id};
  return a.tape->push(std::move(rec));
}

Node axis_op(OpKind kind, Node a, int axis) {
  if (a.tape == nullptr) throw std::invalid_argument("op on a detached node");
  NodeRecord rec;
  rec.kind = kind;
  rec.inputs = {a.id};
  rec.axis = axis;
  return a.tape->push(std::move(rec));
}

struct MatmulDims {
  std::size_t m, k, n;
  Shape out;
};

MatmulDims matmul_dims(const Tensor& a, const Tensor& b) {
  if (a.rank() > 2 || b.rank() > 2) throw ShapeError("matmul needs rank 1 or 2 operands");
  const std::size_t m = a.rank() == 1 ? 1 : a.shape()[0];
  const std::size_t ka = a.rank() == 1 ? a.shape()[0] : a.shape()[1];
  const std::size_t kb = b.shape()[0];
  const std::size_t n = b.rank() == 1 ? 1 : b.shape()[1];
  if (ka != kb) {
    throw ShapeError("matmul inner dimensions differ: " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  Shape out;
  if (a.rank() == 2 && b.rank() == 2) out = {m, n};
  else if (a.rank() == 2) out = {m};
  else if (b.rank() == 2) out = {n};
  else out = {1};
  return {m, ka, n, std::move(out)};
}

}  // namespace

// ---- builders ------------------------------------------------------------

Node add(Node a, Node b) { return binary(OpKind::add, a, b); }
Node sub(Node a, Node b) { return binary(OpKind::sub, a, b); }
Node mul(Node a, Node b) { return binary(OpKind::mul, a, b); }
Node div(Node a, Node b) { return binary(OpKind::div, a, b); }
Node matmul(Node a, Node b) { return binary(OpKind::matmul, a, b); }
Node neg(Node a) { return unary(OpKind::neg, a); }
Node scale(Node a, double factor) { return unary(OpKind::scale, a, factor); }
Node add_scalar(Node a, double addend) { return unary(OpKind::add_scalar, a, addend); }
Node pow(Node a, double exponent) { return unary(OpKind::pow_scalar, a, exponent); }
Node exp(Node a) { return unary(OpKind::exp, a); }
Node log(Node a) { return unary(OpKind::log, a); }
Node tanh(Node a) { return unary(OpKind::tanh, a); }
Node sigmoid(Node a) { return unary(OpKind::sigmoid, a); }
Node relu(Node a) { return unary(OpKind::relu, a); }
Node abs(Node a) { return unary(OpKind::abs, a); }
Node sqrt(Node a) { return unary(OpKind::sqrt, a); }

Node clamp(Node a, double low, double high) {
  if (!(low <= high)) throw std::invalid_argument("clamp: low must not exceed high");
  return unary(OpKind::clamp, a, low, high);
}

Node sum(Node a, int axis) { return axis_op(OpKind::sum, a, axis); }
Node mean(Node a, int axis) { return axis_op(OpKind::mean, a, axis); }
Node l2norm(Node a, int axis) { return axis_op(OpKind::l2norm, a, axis); }
Node softmax(Node a, int axis) { return axis_op(OpKind::softmax, a, axis); }

Node concat(std::span<const Node> parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat of zero nodes");
  Tape* tape = parts.front().tape;
  NodeRecord rec;
  rec.kind = OpKind::concat;
  rec.axis = axis;
  for (const auto& p : parts) {
    if (p.tape != tape || tape == nullptr) throw std::invalid_argument("concat across tapes");
    rec.inputs.push_back(p.id);
  }
  return tape->push(std::move(rec));
}

Node slice(Node a, int axis, std::size_t begin, std::size_t end) {
  if (a.tape == nullptr) throw std::invalid_argument("op on a detached node");
  if (begin >= end) throw std::invalid_argument("slice: empty range");
  NodeRecord rec;
  rec.kind = OpKind::slice;
  rec.inputs = {a.id};
  rec.axis = axis;
  rec.begin = begin;
  rec.end = end;
  return a.tape->push(std::move(rec));
}

Node custom(std::shared_ptr<const CustomOp> op, std::span<const Node> inputs) {
  if (!op) throw std::invalid_argument("custom: null op");
  if (inputs.empty() || inputs.front().tape == nullptr) {
    throw std::invalid_argument("custom: needs at least one input");
  }
  Tape* tape = inputs.front().tape;
  NodeRecord rec;
  rec.kind = OpKind::custom;
  rec.custom = std::move(op);
  for (const auto& in : inputs) {
    if (in.tape != tape) throw std::invalid_argument("custom: inputs on different tapes");
    rec.inputs.push_back(in.id);
  }
  return tape->push(std::move(rec));
}

// ---- forward -------------------------------------------------------------

Tensor Tape::evaluate(std::size_t /*id*/, const NodeRecord& rec) {
  const auto& k = kernels::active();
  auto in = [&](std::size_t i) -> const Tensor& { return values_[rec.inputs[i]]; };

  switch (rec.kind) {
    case OpKind::add:
    case OpKind::sub:
    case OpKind::mul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (a.shape() == b.shape()) {
        Tensor out(a.shape());
        auto fn = rec.kind == OpKind::add ? k.add : rec.kind == OpKind::sub ? k.sub : k.mul;
        fn(a.raw(), b.raw(), out.raw(), a.size());
        return out;
      }
      if (rec.kind == OpKind::add) return broadcast_map(a, b, [](double x, double y) { return x + y; });
      if (rec.kind == OpKind::sub) return broadcast_map(a, b, [](double x, double y) { return x - y; });
      return broadcast_map(a, b, [](double x, double y) { return x * y; });
    }
    case OpKind::div:
      return broadcast_map(in(0), in(1), [](double x, double y) { return x / y; });
    case OpKind::neg:
      return unary_map(in(0), [](double x) { return -x; });
    case OpKind::scale: {
      Tensor out(in(0).shape());
      k.scale(rec.p0, in(0).raw(), out.raw(), out.size());
      return out;
    }
    case OpKind::add_scalar:
      return unary_map(in(0), [c = rec.p0](double x) { return x + c; });
    case OpKind::pow_scalar:
      return unary_map(in(0), [p = rec.p0](double x) { return std::pow(x, p); });
    case OpKind::exp:
      return unary_map(in(0), [](double x) { return std::exp(x); });
    case OpKind::log:
      return unary_map(in(0), [](double x) { return std::log(x); });
    case OpKind::tanh:
      return unary_map(in(0), [](double x) { return std::tanh(x); });
    case OpKind::sigmoid:
      return unary_map(in(0), [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
    case OpKind::relu:
      return unary_map(in(0), [](double x) { return x > 0.0 ? x : 0.0; });
    case OpKind::abs:
      return unary_map(in(0), [](double x) { return std::fabs(x); });
    case OpKind::sqrt:
      return unary_map(in(0), [](double x) { return std::sqrt(x); });
    case OpKind::clamp:
      return unary_map(in(0), [lo = rec.p0, hi = rec.p1](double x) { return std::clamp(x, lo, hi); });
    case OpKind::matmul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const auto md = matmul_dims(a, b);
      Tensor out(md.out);
      k.gemm(false, false, md.m, md.n, md.k, a.raw(), b.raw(), out.raw(), false);
      return out;
    }
    case OpKind::sum:
    case OpKind::mean:
    case OpKind::l2norm: {
      const Tensor& a = in(0);
      const AxisView v = axis_view(a, rec.axis);
      Tensor out(reduced_shape(a, rec.axis));
      for (std::size_t g = 0; g < v.groups; ++g) {
        double acc = 0.0;
        if (rec.kind == OpKind::l2norm) {
          for (std::size_t i = 0; i < v.len; ++i) acc += a[v.at(g, i)] * a[v.at(g, i)];
          acc = std::sqrt(acc);
        } else {
          for (std::size_t i = 0; i < v.len; ++i) acc += a[v.at(g, i)];
          if (rec.kind == OpKind::mean) acc /= static_cast<double>(v.len);
        }
        out[g] = acc;
      }
      return out;
    }
    case OpKind::softmax: {
      const Tensor& a = in(0);
      const AxisView v = axis_view(a, rec.axis);
      Tensor out(a.shape());
      for (std::size_t g = 0; g < v.groups; ++g) {
        double mx = a[v.at(g, 0)];
        for (std::size_t i = 1; i < v.len; ++i) mx = std::max(mx, a[v.at(g, i)]);
        double total = 0.0;
        for (std::size_t i = 0; i < v.len; ++i) {
          const double e = std::exp(a[v.at(g, i)] - mx);
          out[v.at(g, i)] = e;
          total += e;
        }
        for (std::size_t i = 0; i < v.len; ++i) out[v.at(g, i)] /= total;
      }
      return out;
    }
    case OpKind::concat: {
      const Tensor& first = in(0);
      const std::size_t rank = first.rank();
      if (rank > 2) throw ShapeError("concat needs rank 1 or 2");
      if (rank == 1 || rec.axis == 0 || rec.axis == -1) {
        if (rank == 2 && rec.axis == -1) throw ShapeError("concat of rank-2 tensors needs axis 0 or 1");
        std::vector<double> data;
        std::size_t rows = 0;
        for (std::size_t i = 0; i < rec.inputs.size(); ++i) {
          const Tensor& t = in(i);
          if (t.rank() != rank || (rank == 2 && t.shape()[1] != first.shape()[1])) {
            throw ShapeError("concat operand " + std::to_string(i) + " has shape " +
                             shape_string(t.shape()) + ", incompatible with " +
                             shape_string(first.shape()));
          }
          data.insert(data.end(), t.data().begin(), t.data().end());
          rows += rank == 2 ? t.shape()[0] : t.size();
        }
        if (rank == 1) return Tensor({rows}, std::move(data));
        return Tensor({rows, first.shape()[1]}, std::move(data));
      }
      if (rec.axis != 1) throw ShapeError("concat axis must be 0 or 1");
      const std::size_t rows = first.shape()[0];
      std::size_t cols = 0;
      for (std::size_t i = 0; i < rec.inputs.size(); ++i) {
        const Tensor& t = in(i);
        if (t.rank() != 2 || t.shape()[0] != rows) {
          throw ShapeError("concat operand " + std::to_string(i) + " has shape " +
                           shape_string(t.shape()) + ", expected " + std::to_string(rows) + " rows");
        }
        cols += t.shape()[1];
      }
      Tensor out({rows, cols});
      std::size_t offset = 0;
      for (std::size_t i = 0; i < rec.inputs.size(); ++i) {
        const Tensor& t = in(i);
        const std::size_t c = t.shape()[1];
        for (std::size_t r = 0; r < rows; ++r) {
          std::copy_n(t.raw() + r * c, c, out.raw() + r * cols + offset);
        }
        offset += c;
      }
      return out;
    }
    case OpKind::slice: {
      const Tensor& a = in(0);
      if (a.rank() > 2) throw ShapeError("slice needs rank 1 or 2");
      const bool cols_axis = a.rank() == 2 && rec.axis == 1;
      const std::size_t extent = a.rank() == 1 ? a.size() : a.shape()[cols_axis ? 1 : 0];
      if (rec.axis > 1 || (a.rank() == 1 && rec.axis == 1)) throw ShapeError("slice axis out of range");
      if (rec.end > extent) {
        throw ShapeError("slice [" + std::to_string(rec.begin) + ", " + std::to_string(rec.end) +
                         ") exceeds extent " + std::to_string(extent));
      }
      const std::size_t len = rec.end - rec.begin;
      if (a.rank() == 1) {
        return Tensor({len}, std::vector<double>(a.data().begin() + static_cast<std::ptrdiff_t>(rec.begin),
                                                 a.data().begin() + static_cast<std::ptrdiff_t>(rec.end)));
      }
      const std::size_t rows = a.shape()[0], cols = a.shape()[1];
      if (!cols_axis) {
        return Tensor({len, cols},
                      std::vector<double>(a.data().begin() + static_cast<std::ptrdiff_t>(rec.begin * cols),
                                          a.data().begin() + static_cast<std::ptrdiff_t>(rec.end * cols)));
      }
      Tensor out({rows, len});
      for (std::size_t r = 0; r < rows; ++r) std::copy_n(a.raw() + r * cols + rec.begin, len, out.raw() + r * len);
      return out;
    }
    case OpKind::custom: {
      std::vector<const Tensor*> ptrs;
      ptrs.reserve(rec.inputs.size());
      for (auto i : rec.inputs) ptrs.push_back(&values_[i]);
      return rec.custom->forward(ptrs);
    }
    case OpKind::input:
    case OpKind::parameter:
    case OpKind::constant:
      break;
  }
  throw std::logic_error("evaluate: unhandled op");
}

// ---- backward ------------------------------------------------------------

void Tape::propagate(std::size_t id, const NodeRecord& rec, const Tensor& grad) {
  const auto& k = kernels::active();
  const Tensor& out = values_[id];
  auto in = [&](std::size_t i) -> const Tensor& { return values_[rec.inputs[i]]; };
  auto send = [&](std::size_t i, const Tensor& g) {
    const auto target = rec.inputs[i];
    if (nodes_[target].kind == OpKind::constant) return;
    accumulate(target, g);
  };

  switch (rec.kind) {
    case OpKind::add:
      send(0, reduce_to(grad, in(0)));
      send(1, reduce_to(grad, in(1)));
      return;
    case OpKind::sub: {
      send(0, reduce_to(grad, in(0)));
      Tensor g = reduce_to(grad, in(1));
      for (auto& v : g.data()) v = -v;
      send(1, g);
      return;
    }
    case OpKind::mul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (a.shape() == b.shape()) {
        Tensor ga(a.shape()), gb(b.shape());
        k.mul(grad.raw(), b.raw(), ga.raw(), grad.size());
        k.mul(grad.raw(), a.raw(), gb.raw(), grad.size());
        send(0, ga);
        send(1, gb);
        return;
      }
      send(0, reduce_to(broadcast_map(grad, b, [](double g, double y) { return g * y; }), a));
      send(1, reduce_to(broadcast_map(grad, a, [](double g, double x) { return g * x; }), b));
      return;
    }
    case OpKind::div: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      send(0, reduce_to(broadcast_map(grad, b, [](double g, double y) { return g / y; }), a));
      // d(a/b)/db = -out / b
      Tensor gout(out.shape());
      for (std::size_t i = 0; i < out.size(); ++i) gout[i] = -grad[i] * out[i];
      send(1, reduce_to(broadcast_map(gout, b, [](double g, double y) { return g / y; }), b));
      return;
    }
    case OpKind::neg: {
      Tensor g(grad.shape());
      k.scale(-1.0, grad.raw(), g.raw(), g.size());
      send(0, g);
      return;
    }
    case OpKind::scale: {
      Tensor g(grad.shape());
      k.scale(rec.p0, grad.raw(), g.raw(), g.size());
      send(0, g);
      return;
    }
    case OpKind::add_scalar:
      send(0, grad);
      return;
    case OpKind::pow_scalar:
      send(0, unary_grad(grad, in(0), out, [p = rec.p0](double x, double) {
             return p * std::pow(x, p - 1.0);
           }));
      return;
    case OpKind::exp:
      send(0, unary_grad(grad, in(0), out, [](double, double y) { return y; }));
      return;
    case OpKind::log:
      send(0, unary_grad(grad, in(0), out, [](double x, double) { return 1.0 / x; }));
      return;
    case OpKind::tanh:
      send(0, unary_grad(grad, in(0), out, [](double, double y) { return 1.0 - y * y; }));
      return;
    case OpKind::sigmoid:
      send(0, unary_grad(grad, in(0), out, [](double, double y) { return y * (1.0 - y); }));
      return;
    case OpKind::relu:
      send(0, unary_grad(grad, in(0), out, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; }));
      return;
    case OpKind::abs:
      send(0, unary_grad(grad, in(0), out, [](double x, double) {
             return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
           }));
      return;
    case OpKind::sqrt:
      send(0, unary_grad(grad, in(0), out, [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; }));
      return;
    case OpKind::clamp:
      send(0, unary_grad(grad, in(0), out, [lo = rec.p0, hi = rec.p1](double x, double) {
             return (x >= lo && x <= hi) ? 1.0 : 0.0;
           }));
      return;
    case OpKind::matmul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const auto md = matmul_dims(a, b);
      Tensor ga(a.shape()), gb(b.shape());
      // dA = dC * B^T ; dB = A^T * dC
      k.gemm(false, true, md.m, md.k, md.n, grad.raw(), b.raw(), ga.raw(), false);
      k.gemm(true, false, md.k, md.n, md.m, a.raw(), grad.raw(), gb.raw(), false);
      send(0, ga);
      send(1, gb);
      return;
    }
    case OpKind::sum:
    case OpKind::mean:
    case OpKind::l2norm: {
      const Tensor& a = in(0);
      const AxisView v = axis_view(a, rec.axis);
      Tensor g(a.shape());
      for (std::size_t grp = 0; grp < v.groups; ++grp) {
        const double go = grad[grp];
        for (std::size_t i = 0; i < v.len; ++i) {
          const std::size_t idx = v.at(grp, i);
          if (rec.kind == OpKind::sum) g[idx] = go;
          else if (rec.kind == OpKind::mean) g[idx] = go / static_cast<double>(v.len);
          else g[idx] = out[grp] > 0.0 ? go * a[idx] / out[grp] : 0.0;
        }
      }
      send(0, g);
      return;
    }
    case OpKind::softmax: {
      const AxisView v = axis_view(out, rec.axis);
      Tensor g(out.shape());
      for (std::size_t grp = 0; grp < v.groups; ++grp) {
        double dotp = 0.0;
        for (std::size_t i = 0; i < v.len; ++i) dotp += grad[v.at(grp, i)] * out[v.at(grp, i)];
        for (std::size_t i = 0; i < v.len; ++i) {
          const std::size_t idx = v.at(grp, i);
          g[idx] = out[idx] * (grad[idx] - dotp);
        }
      }
      send(0, g);
      return;
    }
    case OpKind::concat: {
      const std::size_t rank = out.rank();
      if (rank == 1 || rec.axis == 0) {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < rec.inputs.size(); ++i) {
          const Tensor& t = in(i);
          Tensor g(t.shape(), std::vector<double>(grad.raw() + offset, grad.raw() + offset + t.size()));
          offset += t.size();
          send(i, g);
        }
        return;
      }
      const std::size_t rows = out.shape()[0], cols = out.shape()[1];
      std::size_t offset = 0;
      for (std::size_t i = 0; i < rec.inputs.size(); ++i) {
        const Tensor& t = in(i);
        const std::size_t c = t.shape()[1];
        Tensor g(t.shape());
        for (std::size_t r = 0; r < rows; ++r) std::copy_n(grad.raw() + r * cols + offset, c, g.raw() + r * c);
        offset += c;
        send(i, g);
      }
      return;
    }
    case OpKind::slice: {
      const Tensor& a = in(0);
      Tensor g(a.shape(), 0.0);
      if (a.rank() == 1) {
        std::copy_n(grad.raw(), grad.size(), g.raw() + rec.begin);
      } else if (rec.axis == 1) {
        const std::size_t rows = a.shape()[0], cols = a.shape()[1], len = rec.end - rec.begin;
        for (std::size_t r = 0; r < rows; ++r) std::copy_n(grad.raw() + r * len, len, g.raw() + r * cols + rec.begin);
      } else {
        std::copy_n(grad.raw(), grad.size(), g.raw() + rec.begin * a.shape()[1]);
      }
      send(0, g);
      return;
    }
    case OpKind::custom: {
      std::vector<const Tensor*> ptrs;
      ptrs.reserve(rec.inputs.size());
      for (auto i : rec.inputs) ptrs.push_back(&values_[i]);
      auto grads = rec.custom->backward(ptrs, out, grad);
      if (grads.size() != rec.inputs.size()) {
        throw std::logic_error(describe(id) + ": custom backward returned wrong gradient count");
      }
      for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].shape() != in(i).shape()) {
          throw ShapeError(describe(id) + ": custom gradient " + std::to_string(i) + " has shape " +
                           shape_string(grads[i].shape()));
        }
        send(i, grads[i]);
      }
      return;
    }
    case OpKind::input:
    case OpKind::parameter:
    case OpKind::constant:
      return;
  }
}

}  // namespace intel_latent::diff
