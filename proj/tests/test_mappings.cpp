#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "intel_latent/gradcheck.hpp"
#include "intel_latent/mappings.hpp"
#include "mapping_helpers.hpp"
#include "random_graph.hpp"

using namespace intel_latent;
using namespace intel_latent::mappings;

namespace {

constexpr double kPi = std::numbers::pi;
// Frozen from the brute-force pass in "cluster separation regression".
constexpr double kClusterSeparationGap = 1.7959908052337199;
const std::vector<double> kSteps{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};

// Sparse mapping whose selector is a single sigmoid layer with zero weights,
// so the gates equal sigmoid(bias).
MappingSpec stub_selector(std::size_t dim, NamedTensors& params, std::vector<double> bias) {
  MappingSpec spec{SparseMapping{diff::make_mlp("mapping.selector", dim, {}, dim, diff::Activation::relu,
                                                diff::Activation::sigmoid)}};
  params["mapping.selector.W0"] = Tensor({dim, dim}, 0.0);
  params["mapping.selector.b0"] = Tensor::vector(std::move(bias));
  return spec;
}

double grad_check(const MappingSpec& spec, const NamedTensors& params, const Tensor& y,
                  const std::vector<std::string>& wrt = {}) {
  diff::Tape tape;
  diff::Node in = tape.input("y", {0, y.shape()[1]});
  auto nodes = build_mapping(tape, spec, in);
  Rng rng(99);
  diff::Node w = tape.constant(testing::random_tensor(rng, y.shape()));
  diff::Node out = diff::sum(nodes.z * w);
  diff::NamedTensors b = params;
  b["y"] = y;
  return diff::finite_diff_check(tape, out, b, 1e-6, wrt).max_relative_error;
}

}  // namespace

TEST_CASE("radial projection") {
  auto z = radial_project(Tensor::vector({3, 4}), 1e-12);
  CHECK(z[0] == doctest::Approx(0.6).epsilon(1e-10));
  CHECK(z[1] == doctest::Approx(0.8).epsilon(1e-10));
  auto o = radial_project(Tensor::vector({0, 0}));
  CHECK(o[0] == 0.0);
  CHECK(o[1] == 0.0);
  auto e = radial_project(Tensor::vector({1, 0}), 1e-4);
  CHECK(e[0] == doctest::Approx(1.0 / (1.0 + 1e-4)).epsilon(1e-15));
  CHECK(e[1] == 0.0);
  CHECK(apply_mapping(radial_mapping(1e-12), {}, Tensor::vector({3, 4}))[0] == doctest::Approx(0.6));
}

TEST_CASE("radial range") {
  Rng rng(4);
  Tensor y = testing::random_tensor(rng, {500, 3}, 4.0);
  Tensor z = radial_project(y, 1e-4);
  for (std::size_t r = 0; r < 500; ++r) {
    double ny = 0, nz = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      ny += y.at(r, c) * y.at(r, c);
      nz += z.at(r, c) * z.at(r, c);
    }
    ny = std::sqrt(ny);
    nz = std::sqrt(nz);
    CHECK(nz < 1.0);
    const double radius = 0.5;
    if (ny >= radius) CHECK(nz >= 1.0 - 1e-4 / (radius + 1e-4) - 1e-15);
  }
}

TEST_CASE("glue formula examples") {
  auto printed = glue_two_hole(Tensor::matrix({{1, 0}, {0, 1}, {0, -1}}), GlueVariant::printed);
  CHECK(printed.at(0, 0) == 1.0);
  CHECK(printed.at(0, 1) == doctest::Approx(-1 / std::sqrt(3.0)));
  CHECK(printed.at(1, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  // The printed factor does not glue (0, 1) to (0, -1).
  CHECK(std::fabs(printed.at(1, 1) - printed.at(2, 1)) == doctest::Approx(2 / std::sqrt(3.0)));

  auto corrected = glue_two_hole(Tensor::matrix({{0, 1}, {0, -1}}));
  CHECK(std::fabs(corrected.at(0, 0) - corrected.at(1, 0)) < 1e-9);
  CHECK(std::fabs(corrected.at(0, 1) - corrected.at(1, 1)) < 1e-9);
}

TEST_CASE("glue oracle over a dense circle") {
  // Mirror pairs (x, y) and (x, -y): only points with x = 0 are glued.
  for (auto variant : {GlueVariant::corrected, GlueVariant::printed}) {
    double pair_gap = 0.0;
    double min_other_gap = std::numeric_limits<double>::infinity();
    for (int i = 1; i < 2000; ++i) {
      const double t = kPi * i / 2000.0;
      const double x = i == 1000 ? 0.0 : std::cos(t), y = std::sin(t);
      auto z = glue_two_hole(Tensor::matrix({{x, y}, {x, -y}}), variant);
      const double gap = std::hypot(z.at(0, 0) - z.at(1, 0), z.at(0, 1) - z.at(1, 1));
      if (i == 1000) pair_gap = gap;
      else if (std::fabs(x) > 0.1) min_other_gap = std::min(min_other_gap, gap);
    }
    if (variant == GlueVariant::corrected) {
      CHECK(pair_gap < 1e-9);
    } else {
      CHECK(pair_gap == doctest::Approx(2 / std::sqrt(3.0)).epsilon(1e-9));
    }
    CHECK(min_other_gap > 1e-3);
  }
}

TEST_CASE("glue mapping is continuous") {
  auto spec = glue_mapping();
  Rng rng(8);
  for (int i = 0; i < 10; ++i) {
    Tensor y = testing::random_tensor(rng, {2});
    Tensor dir = testing::random_tensor(rng, {2});
    auto gaps = testing::perturbation_gaps(spec, {}, y, dir, kSteps);
    for (std::size_t k = 1; k < gaps.size(); ++k) CHECK(gaps[k] <= gaps[k - 1] * (1 + 1e-9));
    CHECK(gaps.back() < 1e-3);
  }
  // Through the glued point itself.
  auto gaps = testing::perturbation_gaps(spec, {}, Tensor::vector({0, 1}), Tensor::vector({1, 0}), kSteps);
  CHECK(gaps.back() < 1e-3);
}

TEST_CASE("sector geometry") {
  auto g4 = sector_geometry(4);
  REQUIRE(g4.boundaries.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(g4.boundaries[k] == doctest::Approx(k * kPi / 2));
  CHECK(g4.centers[0][0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(g4.centers[0][1] == doctest::Approx(std::sqrt(0.5)));
  CHECK(g4.sector_of(0.1) == 0);
  CHECK(g4.sector_of(3 * kPi / 2 + 0.1) == 3);

  auto g3 = sector_geometry(3, Tensor::vector({0, 0, 0}));
  for (double w : g3.widths) CHECK(w == doctest::Approx(2 * kPi / 3));

  auto g2 = sector_geometry(2, Tensor::vector({std::log(2.0), 0}));
  CHECK(g2.widths[0] == doctest::Approx(4 * kPi / 3));
  CHECK(g2.widths[1] == doctest::Approx(2 * kPi / 3));

  CHECK_THROWS(sector_geometry(1));
  CHECK_THROWS(sector_geometry(3, Tensor::vector({0, 0})));
}

TEST_CASE("cluster map examples") {
  auto geom = sector_geometry(4);
  auto on_ray = cluster_map(Tensor::vector({1, 0}), geom);
  CHECK(on_ray[0] == 1.0);
  CHECK(on_ray[1] == 0.0);
  auto z = cluster_map(Tensor::vector({1, 1}), geom, 5.0, 0.2);
  CHECK(z[0] == doctest::Approx(1 + 5 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(z[1] == doctest::Approx(1 + 5 / std::sqrt(2.0)).epsilon(1e-12));
  // On a boundary ray the distance is a rounding residue raised to c2.
  CHECK(apply_mapping(clustered_mapping(4), {}, Tensor::vector({0, 2.5}))[1] == doctest::Approx(2.5).epsilon(1e-2));

  auto axis = cluster_map_axis(Tensor::vector({1, 7}), 5.0, 0.2);
  CHECK(axis[0] == doctest::Approx(6.0));
  CHECK(axis[1] == 7.0);
  CHECK(cluster_map_axis(Tensor::vector({0, 1}))[0] == 0.0);
  CHECK(cluster_map_axis(Tensor::vector({-1, 0}), 5.0, 0.2, 0.5)[0] == doctest::Approx(-0.5 - 5 * std::pow(0.5, 0.2)));
}

TEST_CASE("extra coordinates pass through the sector map") {
  auto z = apply_mapping(clustered_mapping(4), {}, Tensor::vector({1, 1, 3.25}));
  CHECK(z[2] == 3.25);
}

TEST_CASE("decomposable K acts on coordinate pairs") {
  auto spec = clustered_mapping(4);
  std::get<ClusteredMapping>(spec.kind).factors = {2, 2};
  spec.validate(4);
  auto z = apply_mapping(spec, {}, Tensor::vector({0.5, 0.5, -0.5, -0.5}));
  auto first = cluster_map(Tensor::vector({0.5, 0.5}), sector_geometry(2));
  auto second = cluster_map(Tensor::vector({-0.5, -0.5}), sector_geometry(2));
  CHECK(z[0] == first[0]);
  CHECK(z[1] == first[1]);
  CHECK(z[2] == second[0]);
  CHECK(z[3] == second[1]);
  CHECK_THROWS(spec.validate(3));
}

TEST_CASE("unequal sectors use the nearest bounding ray") {
  // widths (4pi/3, 2pi/3): sector 0 spans [0, 4pi/3). A point at angle pi/6,
  // radius 1 is nearest to the ray at angle 0, distance sin(pi/6) = 0.5.
  auto geom = sector_geometry(2, Tensor::vector({std::log(2.0), 0}));
  auto z = cluster_map(Tensor::vector({std::cos(kPi / 6), std::sin(kPi / 6)}), geom, 1.0, 1.0);
  const double shift = 0.5;
  CHECK(z[0] == doctest::Approx(std::cos(kPi / 6) + shift * std::cos(2 * kPi / 3)));
  CHECK(z[1] == doctest::Approx(std::sin(kPi / 6) + shift * std::sin(2 * kPi / 3)));
}

TEST_CASE("cluster separation regression") {
  // Brute-force minimum distance between images of different sectors.
  Rng rng(2718);
  Tensor y = testing::random_tensor(rng, {5000, 2});
  auto geom = sector_geometry(4);
  Tensor z = cluster_map(y, geom, 5.0, 0.2);
  std::vector<std::size_t> sector(5000);
  for (std::size_t i = 0; i < 5000; ++i) {
    double a = std::atan2(y.at(i, 1), y.at(i, 0));
    if (a < 0) a += 2 * kPi;
    sector[i] = geom.sector_of(a);
  }
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 5000; ++i)
    for (std::size_t j = i + 1; j < 5000; ++j) {
      if (sector[i] == sector[j]) continue;
      min_gap = std::min(min_gap, std::hypot(z.at(i, 0) - z.at(j, 0), z.at(i, 1) - z.at(j, 1)));
    }
  CHECK(min_gap > 0.0);
  CHECK(min_gap == doctest::Approx(kClusterSeparationGap).epsilon(1e-9));
}

TEST_CASE("cluster map continuity, including at a boundary ray") {
  auto spec = clustered_mapping(4);
  Rng rng(12);
  for (int i = 0; i < 10; ++i) {
    Tensor y = testing::random_tensor(rng, {2});
    Tensor dir = testing::random_tensor(rng, {2});
    auto gaps = testing::perturbation_gaps(spec, {}, y, dir, kSteps);
    CHECK(gaps.back() < 1e-6);
  }
  // Not Lipschitz at the ray: the gap shrinks like step^0.2.
  auto gaps = testing::perturbation_gaps(spec, {}, Tensor::vector({1, 0}), Tensor::vector({0, 1}), kSteps);
  for (std::size_t k = 1; k < gaps.size(); ++k) CHECK(gaps[k] < gaps[k - 1]);
  CHECK(gaps.back() == doctest::Approx(5 * std::pow(1e-8, 0.2)).epsilon(1e-3));
}

TEST_CASE("sparse gate") {
  NamedTensors params;
  auto open = stub_selector(3, params, {30, 30, 30});
  Tensor y = Tensor::vector({0.3, -1.5, 2.0});
  auto z = apply_mapping(open, params, y);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::fabs(z[i] - y[i]) < 1e-9);

  NamedTensors closed_params;
  auto closed = stub_selector(3, closed_params, {-30, -30, -30});
  const Tensor closed_z = apply_mapping(closed, closed_params, y);
  for (double v : closed_z.data()) CHECK(std::fabs(v) < 1e-9);

  NamedTensors p2;
  auto half = stub_selector(2, p2, {40, -40});
  auto z2 = apply_mapping(half, p2, Tensor::vector({2, -4}));
  CHECK(z2[0] == doctest::Approx(2.0));
  CHECK(std::fabs(z2[1]) < 1e-9);

  Tensor gates;
  sparse_gate(Tensor::matrix({{2, -4}}), std::get<SparseMapping>(half.kind).selector, p2, &gates);
  CHECK(gates.at(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("sparse gate values stay inside (0, 1)") {
  Rng rng(6);
  auto spec = sparse_mapping(4);
  NamedTensors params;
  initialize_mapping(spec, params, rng);
  Tensor gates;
  sparse_gate(testing::random_tensor(rng, {200, 4}), std::get<SparseMapping>(spec.kind).selector, params, &gates);
  for (double g : gates.data()) {
    CHECK(g > 0.0);
    CHECK(g < 1.0);
  }
}

TEST_CASE("hierarchical mapping") {
  SUBCASE("zero combiners give zero") {
    auto spec = hierarchical_mapping({2, 1});
    NamedTensors params;
    Rng rng(1);
    initialize_mapping(spec, params, rng);
    for (auto& [n, t] : params) t.fill(0.0);
    const Tensor z = apply_mapping(spec, params, Tensor::vector({1, 2, 3}));
    for (double v : z.data()) CHECK(v == 0.0);
  }
  SUBCASE("single identity layer passes y through") {
    HierarchicalMapping hm;
    hm.layer_dims = {2};
    hm.combiners.push_back(diff::make_mlp("mapping.combiner0", 2, {}, 2, diff::Activation::relu,
                                          diff::Activation::identity));
    MappingSpec spec{hm};
    NamedTensors params{{"mapping.combiner0.W0", Tensor::matrix({{1, 0}, {0, 1}})},
                        {"mapping.combiner0.b0", Tensor::vector({0, 0})}};
    auto z = apply_mapping(spec, params, Tensor::vector({0.7, -2}));
    CHECK(z[0] == 0.7);
    CHECK(z[1] == -2.0);
  }
  SUBCASE("block causality under random combiners") {
    Rng rng(77);
    auto spec = hierarchical_mapping({2, 2, 1});
    NamedTensors params;
    initialize_mapping(spec, params, rng);
    for (int i = 0; i < 5; ++i) {
      CHECK(testing::hierarchical_upper_block(spec, params, testing::random_tensor(rng, {5})) < 1e-6);
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS(hierarchical_mapping({2, 1}).validate(4));
    CHECK_THROWS(apply_mapping(hierarchical_mapping({2, 1}), {}, Tensor::vector({1, 2})));
  }
}

TEST_CASE("identity mapping") {
  auto z = apply_mapping(identity_mapping(), {}, Tensor::vector({1, 2}));
  CHECK(z == Tensor::vector({1, 2}));
}

TEST_CASE("validation") {
  CHECK_THROWS(clustered_mapping(1).validate(2));
  CHECK_THROWS(radial_mapping(0.0).validate(2));
  CHECK_THROWS(glue_mapping(GlueVariant::corrected, 1e-4, 3).validate(2));
  CHECK_THROWS(glue_mapping().validate(3));
  CHECK_THROWS(clustered_mapping(2).validate(1));
  CHECK_THROWS(sparse_mapping(3).validate(2));
}

TEST_CASE("mapping gradients match finite differences away from kinks") {
  Rng rng(31);
  // Rows within 1e-3 of the axes or the origin are nudged off them.
  Tensor y = testing::random_tensor(rng, {6, 2});
  for (auto& v : y.data())
    if (std::fabs(v) < 1e-3) v = 0.1;

  CHECK(grad_check(radial_mapping(), {}, y) < 1e-5);
  CHECK(grad_check(glue_mapping(), {}, y) < 1e-5);
  CHECK(grad_check(glue_mapping(GlueVariant::printed), {}, y) < 1e-5);
  CHECK(grad_check(clustered_mapping(4), {}, y) < 1e-4);
  CHECK(grad_check(clustered_mapping(3), {}, y) < 1e-4);

  auto axis = clustered_mapping(2);
  auto& cm = std::get<ClusteredMapping>(axis.kind);
  cm.mode = ClusterMode::axis;
  cm.learnable_bias = true;
  NamedTensors bias{{std::string(kBiasParam), Tensor::vector({0.05})}};
  CHECK(grad_check(axis, bias, y) < 1e-4);

  for (std::size_t k : {2u, 3u}) {
    auto learn = clustered_mapping(k, 5.0, 0.2, true);
    NamedTensors logits{{std::string(kLogitsParam), testing::random_tensor(rng, {k}, 0.5)}};
    INFO("K = " << k);
    CHECK(grad_check(learn, logits, y) < 1e-4);
  }

  NamedTensors sp;
  auto sparse = sparse_mapping(2);
  initialize_mapping(sparse, sp, rng);
  CHECK(grad_check(sparse, sp, y) < 1e-4);

  Tensor y5 = testing::random_tensor(rng, {4, 5});
  NamedTensors hp;
  auto hier = hierarchical_mapping({2, 2, 1});
  initialize_mapping(hier, hp, rng);
  CHECK(grad_check(hier, hp, y5) < 1e-4);
}

TEST_CASE("backward is finite at random points") {
  Rng rng(41);
  Tensor y = testing::random_tensor(rng, {50, 2});
  for (auto spec : {radial_mapping(), glue_mapping(), clustered_mapping(4), clustered_mapping(2, 5.0, 0.2, true)}) {
    NamedTensors params;
    initialize_mapping(spec, params, rng);
    diff::Tape tape;
    diff::Node in = tape.input("y", {0, 2});
    auto nodes = build_mapping(tape, spec, in);
    diff::Node out = diff::sum(nodes.z);
    tape.forward(params, {{"y", y}}, out);
    for (auto& [name, g] : tape.backward()) CHECK(g.all_finite());
  }
}
