#include <atomic>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "intel_latent/divergence.hpp"
#include "intel_latent/metrics.hpp"
#include "intel_latent/parallel.hpp"
#include "intel_latent/synthdata.hpp"
#include "intel_latent/vae.hpp"

using namespace intel_latent;

TEST_CASE("parallel blocks visit every block once and propagate errors") {
  std::vector<std::atomic<int>> hits(37);
  parallel_blocks(37, [&](std::size_t b) { hits[b]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK(worker_count() >= 1);
  CHECK_THROWS_AS(parallel_blocks(5, [](std::size_t b) {
                    if (b == 3) throw std::runtime_error("block 3");
                  }),
                  std::runtime_error);
}

TEST_CASE("sparsity weight raises the hoyer score") {
  synth::DatasetSpec spec;
  spec.shape = synth::DataShape::sparse2d;
  spec.n = 2000;
  spec.seed = 17;
  const Tensor data = synth::gen_synthetic(spec).samples;
  int monotone = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::vector<double> scores;
    for (double gamma : {0.0, 10.0, 30.0}) {
      vae::ModelConfig c;
      c.mapping = mappings::sparse_mapping(2);
      vae::VaeModel m = vae::make_model(c, seed);
      vae::train(m, data, {.epochs = 40, .objective = {.gamma = gamma}, .seed = seed + 1});
      scores.push_back(metrics::hoyer_score(vae::represent(m, data)));
    }
    INFO("seed " << seed << ": " << scores[0] << " " << scores[1] << " " << scores[2]);
    if (scores[0] <= scores[1] && scores[1] <= scores[2]) ++monotone;
  }
  CHECK(monotone >= 2);
}

TEST_CASE("a frozen 0/1 gate cannot raise the KL") {
  // Gating coordinates to zero in both q and the prior is a projection onto
  // the open coordinates.
  Eigen::VectorXd mean(4), var(4);
  mean << 0.4, -1.1, 0.0, 2.0;
  var << 0.5, 1.3, 2.0, 0.2;
  auto q = divergence::GaussianSpec::diagonal(mean, var);
  for (std::vector<std::size_t> open : {std::vector<std::size_t>{0}, {1, 3}, {0, 2, 3}}) {
    auto r = divergence::check_marginal_inequality(q, open);
    CHECK(r.holds);
    CHECK(r.strict);
  }
}

TEST_CASE("radial latents are on the circle within epsilon after training") {
  synth::DatasetSpec spec;
  spec.n = 1000;
  const Tensor data = synth::gen_synthetic(spec).samples;
  vae::ModelConfig c;
  c.mapping = mappings::radial_mapping();
  vae::VaeModel m = vae::make_model(c, 2);
  vae::train(m, data, {.epochs = 5});
  const Tensor z = vae::represent(m, data);
  double dev = 0;
  for (std::size_t r = 0; r < 1000; ++r) dev += std::fabs(std::hypot(z.at(r, 0), z.at(r, 1)) - 1);
  CHECK(dev / 1000 < 1e-2);
}
