#include <numeric>
#include <stdexcept>
#include <string>

#include "intel_latent/errors.hpp"
#include "internal.hpp"

namespace intel_latent::mappings {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

std::vector<std::size_t> ClusteredMapping::plane_factors() const {
  return factors.empty() ? std::vector<std::size_t>{k} : factors;
}

std::string_view MappingSpec::name() const {
  return std::visit(overloaded{
                        [](const IdentityMapping&) { return std::string_view("identity"); },
                        [](const RadialMapping&) { return std::string_view("radial"); },
                        [](const GlueMapping&) { return std::string_view("glue"); },
                        [](const ClusteredMapping&) { return std::string_view("clustered"); },
                        [](const SparseMapping&) { return std::string_view("sparse"); },
                        [](const HierarchicalMapping&) { return std::string_view("hierarchical"); },
                    },
                    kind);
}

void MappingSpec::validate(std::size_t dim_y) const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("mapping: " + msg); };
  if (dim_y == 0) fail("dim_y must be positive");
  std::visit(
      overloaded{
          [](const IdentityMapping&) {},
          [&](const RadialMapping& m) {
            if (!(m.epsilon > 0.0)) fail("radial epsilon must be positive");
          },
          [&](const GlueMapping& m) {
            if (!(m.epsilon > 0.0)) fail("glue epsilon must be positive");
            if (m.holes != 1 && m.holes != 2) fail("glue supports 1 or 2 holes, got " + std::to_string(m.holes));
            if (m.holes == 2 && dim_y != 2) fail("two-hole glue needs dim_y == 2");
          },
          [&](const ClusteredMapping& m) {
            if (m.k < 2) fail("clustered K must be at least 2");
            if (m.mode == ClusterMode::axis) {
              if (m.k != 2) fail("axis mode splits into exactly K = 2 clusters");
              if (m.learnable_proportions) fail("axis mode learns a bias, not sector logits");
              return;
            }
            if (m.learnable_bias) fail("learnable bias is only defined for axis mode");
            const auto fs = m.plane_factors();
            std::size_t product = 1;
            for (auto f : fs) {
              if (f < 2) fail("every sector factor must be at least 2");
              product *= f;
            }
            if (product != m.k) fail("sector factors multiply to " + std::to_string(product) + ", not K");
            if (2 * fs.size() > dim_y) {
              fail("sector mode needs " + std::to_string(2 * fs.size()) + " latent coordinates, dim_y is " +
                   std::to_string(dim_y));
            }
            if (m.learnable_proportions && fs.size() != 1) {
              fail("learnable proportions need a single sector plane");
            }
            if (!(m.c2 > 0.0)) fail("c2 must be positive");
          },
          [&](const SparseMapping& m) {
            m.selector.validate();
            if (m.selector.input_dim() != dim_y || m.selector.output_dim() != dim_y) {
              fail("selector must map dim_y -> dim_y");
            }
          },
          [&](const HierarchicalMapping& m) {
            if (m.layer_dims.empty()) fail("hierarchical mapping needs at least one layer");
            if (m.combiners.size() != m.layer_dims.size()) fail("one combiner per layer required");
            const std::size_t total = std::accumulate(m.layer_dims.begin(), m.layer_dims.end(), std::size_t{0});
            if (total != dim_y) {
              fail("layer dims sum to " + std::to_string(total) + ", dim_y is " + std::to_string(dim_y));
            }
            for (std::size_t j = 0; j < m.layer_dims.size(); ++j) {
              const auto& c = m.combiners[j];
              c.validate();
              const std::size_t expect_in = j == 0 ? m.layer_dims[0] : m.layer_dims[j - 1] + m.layer_dims[j];
              if (c.input_dim() != expect_in || c.output_dim() != m.layer_dims[j]) {
                fail("combiner " + std::to_string(j) + " must map " + std::to_string(expect_in) + " -> " +
                     std::to_string(m.layer_dims[j]));
              }
            }
          },
      },
      kind);
}

MappingSpec identity_mapping() { return MappingSpec{IdentityMapping{}}; }

MappingSpec radial_mapping(double epsilon) { return MappingSpec{RadialMapping{epsilon}}; }

MappingSpec glue_mapping(GlueVariant variant, double epsilon, int holes) {
  GlueMapping m;
  m.holes = holes;
  m.epsilon = epsilon;
  m.variant = variant;
  return MappingSpec{m};
}

MappingSpec clustered_mapping(std::size_t k, double c1, double c2, bool learnable_proportions) {
  ClusteredMapping m;
  m.k = k;
  m.c1 = c1;
  m.c2 = c2;
  m.learnable_proportions = learnable_proportions;
  return MappingSpec{m};
}

MappingSpec sparse_mapping(std::size_t dim_y, const std::vector<std::size_t>& hidden) {
  return MappingSpec{SparseMapping{diff::make_mlp("mapping.selector", dim_y, hidden, dim_y,
                                                  diff::Activation::relu, diff::Activation::sigmoid)}};
}

MappingSpec hierarchical_mapping(const std::vector<std::size_t>& layer_dims) {
  HierarchicalMapping m;
  m.layer_dims = layer_dims;
  for (std::size_t j = 0; j < layer_dims.size(); ++j) {
    const std::size_t in = j == 0 ? layer_dims[0] : layer_dims[j - 1] + layer_dims[j];
    m.combiners.push_back(diff::make_mlp("mapping.combiner" + std::to_string(j), in, {}, layer_dims[j],
                                         diff::Activation::relu, diff::Activation::tanh));
  }
  return MappingSpec{m};
}

void initialize_mapping(const MappingSpec& spec, NamedTensors& params, Rng& rng) {
  std::visit(overloaded{
                 [&](const ClusteredMapping& m) {
                   if (m.learnable_proportions) params.insert_or_assign(std::string(kLogitsParam), Tensor({m.k}, 0.0));
                   if (m.learnable_bias) params.insert_or_assign(std::string(kBiasParam), Tensor({1}, 0.0));
                 },
                 [&](const SparseMapping& m) { m.selector.initialize(params, rng); },
                 [&](const HierarchicalMapping& m) {
                   for (const auto& c : m.combiners) c.initialize(params, rng);
                 },
                 [](const auto&) {},
             },
             spec.kind);
}

MappingNodes build_mapping(Tape& tape, const MappingSpec& spec, Node y) {
  auto radial = [&](Node v, double eps) { return v / add_scalar(diff::l2norm(v, 1), eps); };
  return std::visit(
      overloaded{
          [&](const IdentityMapping&) { return MappingNodes{y, std::nullopt}; },
          [&](const RadialMapping& m) { return MappingNodes{radial(y, m.epsilon), std::nullopt}; },
          [&](const GlueMapping& m) {
            Node projected = radial(y, m.epsilon);
            if (m.holes == 1) return MappingNodes{projected, std::nullopt};
            const Node in[] = {projected};
            return MappingNodes{diff::custom(detail::make_glue_op(m.variant), in), std::nullopt};
          },
          [&](const ClusteredMapping& m) {
            if (m.mode == ClusterMode::axis) {
              auto op = detail::make_axis_op(m.c1, m.c2, m.learnable_bias);
              if (m.learnable_bias) {
                const Node in[] = {y, tape.parameter(std::string(kBiasParam))};
                return MappingNodes{diff::custom(op, in), std::nullopt};
              }
              const Node in[] = {y};
              return MappingNodes{diff::custom(op, in), std::nullopt};
            }
            auto op = detail::make_sector_op(m.plane_factors(), m.c1, m.c2, m.learnable_proportions);
            if (m.learnable_proportions) {
              const Node in[] = {y, tape.parameter(std::string(kLogitsParam))};
              return MappingNodes{diff::custom(op, in), std::nullopt};
            }
            const Node in[] = {y};
            return MappingNodes{diff::custom(op, in), std::nullopt};
          },
          [&](const SparseMapping& m) {
            Node gates = m.selector.build(tape, y);
            return MappingNodes{y * gates, gates};
          },
          [&](const HierarchicalMapping& m) {
            std::vector<Node> parts;
            std::size_t offset = 0;
            for (std::size_t j = 0; j < m.layer_dims.size(); ++j) {
              Node yj = diff::slice(y, 1, offset, offset + m.layer_dims[j]);
              offset += m.layer_dims[j];
              Node in = yj;
              if (j > 0) {
                const Node pair[] = {parts.back(), yj};
                in = diff::concat(pair, 1);
              }
              parts.push_back(m.combiners[j].build(tape, in));
            }
            if (parts.size() == 1) return MappingNodes{parts.front(), std::nullopt};
            return MappingNodes{diff::concat(parts, 1), std::nullopt};
          },
      },
      spec.kind);
}

Tensor apply_mapping(const MappingSpec& spec, const NamedTensors& params, const Tensor& y) {
  const bool single = y.rank() == 1;
  const Tensor batch = single ? y.reshaped({1, y.size()}) : y;
  if (batch.rank() != 2) throw ShapeError("apply_mapping: y must be rank 1 or 2");
  spec.validate(batch.shape()[1]);
  Tape tape;
  Node in = tape.input("y", {0, batch.shape()[1]});
  const MappingNodes nodes = build_mapping(tape, spec, in);
  NamedTensors inputs{{"y", batch}};
  Tensor out = tape.forward(params, inputs, nodes.z);
  return single ? out.reshaped({out.size()}) : out;
}

}  // namespace intel_latent::mappings
