#include <cmath>
#include <numbers>
#include <stdexcept>

#include "intel_latent/errors.hpp"
#include "internal.hpp"

namespace intel_latent::mappings {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kInvSqrt3 = 1.0 / std::sqrt(3.0);

void require_rank2(const Tensor& t, std::string_view op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + " expects a batch (rank 2), got " + shape_string(t.shape()));
  }
}

// ---- glue ------------------------------------------------------------------

class GlueOp final : public diff::CustomOp {
 public:
  explicit GlueOp(GlueVariant variant)
      : variant_(variant), constant_(variant == GlueVariant::printed ? 4.0 / 3.0 : 1.0) {}

  std::string_view name() const override {
    return variant_ == GlueVariant::printed ? "glue_two_hole[printed]" : "glue_two_hole";
  }

  Tensor forward(std::span<const Tensor* const> inputs) const override {
    const Tensor& x = *inputs[0];
    require_rank2(x, "glue_two_hole");
    if (x.shape()[1] != 2) throw ShapeError("glue_two_hole needs 2 columns, got " + shape_string(x.shape()));
    Tensor out(x.shape());
    for (std::size_t r = 0; r < x.shape()[0]; ++r) {
      const double x0 = x.at(r, 0), x1 = x.at(r, 1);
      out.at(r, 0) = x0;
      out.at(r, 1) = x1 * scale(x0) - kInvSqrt3;
    }
    return out;
  }

  std::vector<Tensor> backward(std::span<const Tensor* const> inputs, const Tensor& /*output*/,
                               const Tensor& grad) const override {
    const Tensor& x = *inputs[0];
    Tensor g(x.shape());
    for (std::size_t r = 0; r < x.shape()[0]; ++r) {
      const double x0 = x.at(r, 0), x1 = x.at(r, 1);
      const double s = scale(x0);
      const double sign = x0 > 0 ? 1.0 : (x0 < 0 ? -1.0 : 0.0);
      const double ds = s > 0.0 ? (1.0 - std::fabs(x0)) * sign / s : 0.0;
      g.at(r, 0) = grad.at(r, 0) + grad.at(r, 1) * x1 * ds;
      g.at(r, 1) = grad.at(r, 1) * s;
    }
    return {g};
  }

 private:
  double scale(double x0) const {
    const double t = 1.0 - std::fabs(x0);
    double radicand = constant_ - t * t;
    if (radicand < 0.0) {
      if (radicand < -1e-12) {
        throw NumericError("glue_two_hole: negative radicand (|x1| > 1 is outside the projected disc)");
      }
      radicand = 0.0;
    }
    return std::sqrt(radicand);
  }

  GlueVariant variant_;
  double constant_;
};

// ---- sector cluster ----------------------------------------------------------

class SectorOp final : public diff::CustomOp {
 public:
  SectorOp(std::vector<std::size_t> factors, double c1, double c2, bool learnable)
      : factors_(std::move(factors)), c1_(c1), c2_(c2), learnable_(learnable) {}

  std::string_view name() const override { return "cluster_map"; }

  Tensor forward(std::span<const Tensor* const> inputs) const override {
    const Tensor& y = *inputs[0];
    check(y, inputs);
    Tensor out = y;
    for (std::size_t plane = 0; plane < factors_.size(); ++plane) {
      const SectorGeometry geom = geometry(plane, inputs);
      const std::size_t c0 = 2 * plane;
      for (std::size_t r = 0; r < y.shape()[0]; ++r) {
        const auto sp = detail::eval_sector_point(y.at(r, c0), y.at(r, c0 + 1), geom, c1_, c2_);
        out.at(r, c0) = sp.out[0];
        out.at(r, c0 + 1) = sp.out[1];
      }
    }
    return out;
  }

  std::vector<Tensor> backward(std::span<const Tensor* const> inputs, const Tensor& /*output*/,
                               const Tensor& grad) const override {
    const Tensor& y = *inputs[0];
    Tensor gy = grad;
    std::vector<double> g_boundary;  // d loss / d boundary angle, k = 0..K
    for (std::size_t plane = 0; plane < factors_.size(); ++plane) {
      const SectorGeometry geom = geometry(plane, inputs);
      if (learnable_) g_boundary.assign(geom.k + 1, 0.0);
      const std::size_t c0 = 2 * plane;
      for (std::size_t r = 0; r < y.shape()[0]; ++r) {
        const auto sp = detail::eval_sector_point(y.at(r, c0), y.at(r, c0 + 1), geom, c1_, c2_);
        const double g0 = grad.at(r, c0), g1 = grad.at(r, c0 + 1);
        const double gc = g0 * sp.center[0] + g1 * sp.center[1];
        gy.at(r, c0) = g0 + gc * sp.shift_slope * sp.ddis_dp[0];
        gy.at(r, c0 + 1) = g1 + gc * sp.shift_slope * sp.ddis_dp[1];
        if (learnable_) {
          // The bisector angle is the mean of the two bounding angles.
          const double g_dc = 0.5 * (-g0 * std::sin(sp.center_angle) + g1 * std::cos(sp.center_angle));
          g_boundary[sp.sector] += gc * sp.shift_slope * sp.ddis_dstart + sp.shift * g_dc;
          g_boundary[sp.sector + 1] += gc * sp.shift_slope * sp.ddis_dend + sp.shift * g_dc;
        }
      }
    }
    std::vector<Tensor> grads{gy};
    if (learnable_) {
      const Tensor& u = *inputs[1];
      const std::size_t k = u.size();
      const SectorGeometry geom = geometry(0, inputs);
      std::vector<double> s(k);
      for (std::size_t i = 0; i < k; ++i) s[i] = geom.widths[i] / kTwoPi;
      // boundary_j = 2pi * sum_{i<j} s_i for j = 1..K-1; boundary_0 = 0 and
      // boundary_K = 2pi are fixed.
      Tensor gu(u.shape(), 0.0);
      double prefix = 0.0;
      std::vector<double> prefix_at(k + 1, 0.0);
      for (std::size_t j = 0; j <= k; ++j) {
        prefix_at[j] = prefix;
        if (j < k) prefix += s[j];
      }
      for (std::size_t m = 0; m < k; ++m) {
        double acc = 0.0;
        for (std::size_t j = 1; j < k; ++j) {
          acc += g_boundary[j] * ((m < j ? 1.0 : 0.0) - prefix_at[j]);
        }
        gu[m] = kTwoPi * s[m] * acc;
      }
      grads.push_back(gu);
    }
    return grads;
  }

 private:
  void check(const Tensor& y, std::span<const Tensor* const> inputs) const {
    require_rank2(y, "cluster_map");
    if (y.shape()[1] < 2 * factors_.size()) {
      throw ShapeError("cluster_map needs " + std::to_string(2 * factors_.size()) +
                       " latent coordinates, got " + shape_string(y.shape()));
    }
    if (learnable_ && (inputs.size() != 2 || inputs[1]->size() != factors_.front())) {
      throw ShapeError("cluster_map: learnable proportions need " +
                       std::to_string(factors_.front()) + " logits");
    }
  }

  SectorGeometry geometry(std::size_t plane, std::span<const Tensor* const> inputs) const {
    if (learnable_) return sector_geometry(factors_[plane], *inputs[1]);
    return sector_geometry(factors_[plane]);
  }

  std::vector<std::size_t> factors_;
  double c1_, c2_;
  bool learnable_;
};

// ---- axis cluster --------------------------------------------------------------

class AxisOp final : public diff::CustomOp {
 public:
  AxisOp(double c1, double c2, bool learnable_bias) : c1_(c1), c2_(c2), learnable_(learnable_bias) {}

  std::string_view name() const override { return "cluster_map_axis"; }

  Tensor forward(std::span<const Tensor* const> inputs) const override {
    const Tensor& y = *inputs[0];
    require_rank2(y, "cluster_map_axis");
    const double b = bias(inputs);
    Tensor out = y;
    for (std::size_t r = 0; r < y.shape()[0]; ++r) {
      const double v = y.at(r, 0) + b;
      const double sign = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
      out.at(r, 0) = v + c1_ * std::pow(std::fabs(v), c2_) * sign;
    }
    return out;
  }

  std::vector<Tensor> backward(std::span<const Tensor* const> inputs, const Tensor& /*output*/,
                               const Tensor& grad) const override {
    const Tensor& y = *inputs[0];
    const double b = bias(inputs);
    Tensor gy = grad;
    double gb = 0.0;
    for (std::size_t r = 0; r < y.shape()[0]; ++r) {
      const double v = y.at(r, 0) + b;
      const double av = std::fabs(v);
      const double slope = av > 0.0 ? 1.0 + c1_ * c2_ * std::pow(av, c2_ - 1.0) : 1.0;
      gy.at(r, 0) = grad.at(r, 0) * slope;
      gb += grad.at(r, 0) * slope;
    }
    std::vector<Tensor> grads{gy};
    if (learnable_) grads.push_back(Tensor(inputs[1]->shape(), gb));
    return grads;
  }

 private:
  double bias(std::span<const Tensor* const> inputs) const {
    if (!learnable_) return 0.0;
    if (inputs.size() != 2 || inputs[1]->size() != 1) {
      throw ShapeError("cluster_map_axis: learnable bias must be a single value");
    }
    return (*inputs[1])[0];
  }

  double c1_, c2_;
  bool learnable_;
};

// Value-level helpers run a rank-1 vector as a batch of one.
Tensor as_batch(const Tensor& y) {
  if (y.rank() == 1) return y.reshaped({1, y.size()});
  require_rank2(y, "mapping");
  return y;
}

Tensor restore(const Tensor& out, const Tensor& like) {
  return like.rank() == 1 ? out.reshaped(like.shape()) : out;
}

Tensor run_op(const diff::CustomOp& op, std::initializer_list<const Tensor*> inputs) {
  std::vector<const Tensor*> ptrs(inputs);
  Tensor out = op.forward(ptrs);
  if (!out.all_finite()) throw NumericError(std::string(op.name()) + ": non-finite output");
  return out;
}

}  // namespace

namespace detail {

std::shared_ptr<const diff::CustomOp> make_glue_op(GlueVariant variant) {
  return std::make_shared<GlueOp>(variant);
}

std::shared_ptr<const diff::CustomOp> make_sector_op(std::vector<std::size_t> factors, double c1,
                                                     double c2, bool learnable) {
  return std::make_shared<SectorOp>(std::move(factors), c1, c2, learnable);
}

std::shared_ptr<const diff::CustomOp> make_axis_op(double c1, double c2, bool learnable_bias) {
  return std::make_shared<AxisOp>(c1, c2, learnable_bias);
}

}  // namespace detail

Tensor radial_project(const Tensor& y, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("radial_project: epsilon must be positive");
  return apply_mapping(radial_mapping(epsilon), {}, y);
}

Tensor glue_two_hole(const Tensor& projected, GlueVariant variant) {
  const Tensor batch = as_batch(projected);
  return restore(run_op(GlueOp(variant), {&batch}), projected);
}

Tensor cluster_map(const Tensor& y, const SectorGeometry& geom, double c1, double c2) {
  const Tensor batch = as_batch(y);
  if (batch.shape()[1] < 2) throw ShapeError("cluster_map needs at least 2 latent coordinates");
  Tensor out = batch;
  for (std::size_t r = 0; r < batch.shape()[0]; ++r) {
    const auto sp = detail::eval_sector_point(batch.at(r, 0), batch.at(r, 1), geom, c1, c2);
    out.at(r, 0) = sp.out[0];
    out.at(r, 1) = sp.out[1];
  }
  return restore(out, y);
}

Tensor cluster_map_axis(const Tensor& y, double c1, double c2, double bias) {
  const Tensor batch = as_batch(y);
  const Tensor b = Tensor::scalar(bias);
  return restore(run_op(AxisOp(c1, c2, true), {&batch, &b}), y);
}

Tensor sparse_gate(const Tensor& y, const Mlp& selector, const NamedTensors& params, Tensor* gates) {
  const Tensor batch = as_batch(y);
  if (selector.output_dim() != batch.shape()[1] || selector.input_dim() != batch.shape()[1]) {
    throw ShapeError("sparse_gate: selector maps " + std::to_string(selector.input_dim()) + " -> " +
                     std::to_string(selector.output_dim()) + " but y has " +
                     std::to_string(batch.shape()[1]) + " coordinates");
  }
  Tape tape;
  Node in = tape.input("y", {});
  Node g = selector.build(tape, in);
  Node z = in * g;
  NamedTensors inputs{{"y", batch}};
  Tensor out = tape.forward(params, inputs, z);
  if (gates != nullptr) *gates = restore(tape.value(g), y);
  return restore(out, y);
}

Tensor hierarchical_map(const Tensor& y, const HierarchicalMapping& spec, const NamedTensors& params) {
  MappingSpec wrapped{spec};
  return apply_mapping(wrapped, params, y);
}

}  // namespace intel_latent::mappings
