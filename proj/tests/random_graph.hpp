#pragma once

// Random composed graphs over the tape primitives, for gradient checks.

#include <string>
#include <vector>

#include "intel_latent/rng.hpp"
#include "intel_latent/tape.hpp"

namespace intel_latent::testing {

struct RandomGraph {
  diff::Node output;
  diff::NamedTensors bindings;
  std::vector<std::string> ops;  // recorded primitive names, in order
};

inline Tensor random_tensor(Rng& rng, Shape shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = scale * rng.normal();
  return t;
}

/// Builds `steps` random operations on a pool of 4 x 3 nodes and reduces
/// to a scalar. Inputs of log/sqrt/pow/div are mapped into [0.5, 1.5] first.
inline RandomGraph build_random_graph(diff::Tape& tape, Rng& rng, std::size_t steps = 8) {
  using namespace diff;
  RandomGraph g;
  const std::size_t rows = 4, cols = 3;
  Node x = tape.input("x", {0, cols});
  Node w = tape.parameter("w");
  Node v = tape.parameter("v");
  g.bindings["x"] = random_tensor(rng, {rows, cols});
  g.bindings["w"] = random_tensor(rng, {cols, cols}, 0.6);
  g.bindings["v"] = random_tensor(rng, {cols});

  std::vector<Node> pool{x, add(x, v)};
  auto pick = [&]() { return pool[rng.index(pool.size())]; };
  auto positive = [&](Node a) { return add_scalar(sigmoid(a), 0.5); };

  for (std::size_t s = 0; s < steps; ++s) {
    Node a = pick(), b = pick(), r;
    switch (rng.index(16)) {
      case 0: r = add(a, b); g.ops.push_back("add"); break;
      case 1: r = sub(a, b); g.ops.push_back("sub"); break;
      case 2: r = mul(a, b); g.ops.push_back("mul"); break;
      case 3: r = div(a, positive(b)); g.ops.push_back("div"); break;
      case 4: r = matmul(a, w); g.ops.push_back("matmul"); break;
      case 5: r = tanh(a); g.ops.push_back("tanh"); break;
      case 6: r = exp(tanh(a)); g.ops.push_back("exp"); break;
      case 7: r = log(positive(a)); g.ops.push_back("log"); break;
      case 8: r = pow(positive(a), 1.7); g.ops.push_back("pow"); break;
      case 9: r = sqrt(positive(a)); g.ops.push_back("sqrt"); break;
      case 10: r = softmax(a, 1); g.ops.push_back("softmax"); break;
      case 11: r = mul(a, l2norm(b, 1)); g.ops.push_back("l2norm"); break;
      case 12: r = add(a, sum(b, 0)); g.ops.push_back("sum"); break;
      case 13: r = sub(a, mean(b, 1)); g.ops.push_back("mean"); break;
      case 14: {
        const Node parts[] = {a, b};
        r = slice(concat(parts, 1), 1, 1, 1 + cols);
        g.ops.push_back("concat+slice");
        break;
      }
      default: r = add(relu(a), scale(neg(a), 0.5)); g.ops.push_back("relu"); break;
    }
    pool.push_back(r);
  }
  Node c = tape.constant(random_tensor(rng, {rows, cols}), "weights");
  g.output = sum(mul(pool.back(), c));
  return g;
}

}  // namespace intel_latent::testing
