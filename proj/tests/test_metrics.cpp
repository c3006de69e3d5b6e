#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "intel_latent/errors.hpp"
#include "intel_latent/metrics.hpp"
#include "random_graph.hpp"

using namespace intel_latent;
using namespace intel_latent::metrics;

namespace {

double brute_energy(const Tensor& a, const Tensor& b) {
  auto dist = [](const Tensor& p, std::size_t i, const Tensor& q, std::size_t j) {
    double s = 0;
    for (std::size_t c = 0; c < p.shape()[1]; ++c) s += (p.at(i, c) - q.at(j, c)) * (p.at(i, c) - q.at(j, c));
    return std::sqrt(s);
  };
  const std::size_t na = a.shape()[0], nb = b.shape()[0];
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) ab += dist(a, i, b, j);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < na; ++j)
      if (i != j) aa += dist(a, i, a, j);
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = 0; j < nb; ++j)
      if (i != j) bb += dist(b, i, b, j);
  return 2 * ab / (na * nb) - (na > 1 ? aa / (na * (na - 1.0)) : 0) - (nb > 1 ? bb / (nb * (nb - 1.0)) : 0);
}

Tensor gaussian_cloud(Rng& rng, std::size_t n, double shift) {
  Tensor t = testing::random_tensor(rng, {n, 2});
  for (std::size_t r = 0; r < n; ++r) t.at(r, 0) += shift;
  return t;
}

}  // namespace

TEST_CASE("hoyer examples") {
  CHECK(hoyer_score(Tensor::matrix({{1, 0}, {0, 1}})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(hoyer_score(Tensor::matrix({{1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1}})) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  const double expected = (std::sqrt(2.0) - 5 / std::sqrt(17.0)) / (std::sqrt(2.0) - 1);
  CHECK(hoyer_score(Tensor::matrix({{3, 4}, {-3, 4}})) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.4866).epsilon(1e-3));
  CHECK_THROWS(hoyer_score(Tensor::matrix({{1}, {2}})));
  CHECK_THROWS(hoyer_score(Tensor::matrix({{1, 2}})));
  const double one_hot[] = {0, 0, 5};
  CHECK(hoyer(one_hot, 3) == doctest::Approx(1.0));
  const double zero[] = {0, 0};
  CHECK(hoyer(zero, 2) == 0.0);
}

TEST_CASE("hoyer one-hot and dense datasets") {
  Tensor one_hot({60, 6}, 0.0);
  for (std::size_t r = 0; r < 60; ++r) one_hot.at(r, (r * 7) % 6) = 1.0 + r;
  CHECK(hoyer_score(one_hot) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(hoyer_score(Tensor({10, 5}, 0.3)) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
}

TEST_CASE("hoyer is invariant to per-dimension scaling") {
  Rng rng(3);
  Tensor z = testing::random_tensor(rng, {200, 5});
  const double base = hoyer_score(z);
  Tensor scaled = z;
  for (std::size_t c = 0; c < 5; ++c) {
    const double s = std::exp(2 * rng.normal());
    for (std::size_t r = 0; r < 200; ++r) scaled.at(r, c) *= s;
  }
  CHECK(std::fabs(hoyer_score(scaled) - base) < 1e-12);
}

TEST_CASE("energy distance") {
  CHECK(energy_distance(Tensor::matrix({{0, 0}}), Tensor::matrix({{0, 0}})) == 0.0);
  CHECK(energy_distance(Tensor::matrix({{0}}), Tensor::matrix({{1}})) == 2.0);
  CHECK_THROWS(energy_distance(Tensor::matrix({{0, 0}}), Tensor::matrix({{0, 0, 0}})));

  Rng rng(5);
  Tensor a = gaussian_cloud(rng, 150, 0), b = gaussian_cloud(rng, 170, 0.5);
  CHECK(energy_distance(a, b) == doctest::Approx(brute_energy(a, b)).epsilon(1e-12));
  CHECK(energy_distance(a, b) == doctest::Approx(energy_distance(b, a)).epsilon(1e-12));
  CHECK(energy_distance(a, a) <= 1e-12);
}

TEST_CASE("energy distance separates shifted clouds") {
  Rng rng(6);
  Tensor a = gaussian_cloud(rng, 2000, 0), same = gaussian_cloud(rng, 2000, 0), shifted = gaussian_cloud(rng, 2000, 2);
  CHECK(energy_distance(a, same) < energy_distance(a, shifted));
}

TEST_CASE("monte carlo kl") {
  auto normal_logpdf = [](double mean, double sd) {
    return [=](const std::vector<double>& y) {
      const double z = (y[0] - mean) / sd;
      return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2 * std::numbers::pi);
    };
  };
  auto sampler = [](double mean, double sd) {
    return [=](Rng& r) { return std::vector<double>{r.normal(mean, sd)}; };
  };
  auto same = mc_kl(normal_logpdf(0, 1), normal_logpdf(0, 1), sampler(0, 1), 1000, 1);
  CHECK(same.estimate == 0.0);
  CHECK(same.stderr_ == 0.0);

  auto shifted = mc_kl(normal_logpdf(1, 1), normal_logpdf(0, 1), sampler(1, 1), 100000, 2);
  CHECK(std::fabs(shifted.estimate - 0.5) < 3 * shifted.stderr_);

  auto wide = mc_kl(normal_logpdf(0, 2), normal_logpdf(0, 1), sampler(0, 2), 100000, 3);
  const double analytic = 0.5 * (4 - 1 - std::log(4.0));
  CHECK(analytic == doctest::Approx(0.80685).epsilon(1e-4));
  CHECK(std::fabs(wide.estimate - analytic) < 3 * wide.stderr_);

  auto small = mc_kl(normal_logpdf(1, 1), normal_logpdf(0, 1), sampler(1, 1), 10000, 4);
  auto big = mc_kl(normal_logpdf(1, 1), normal_logpdf(0, 1), sampler(1, 1), 40000, 4);
  CHECK(small.stderr_ / big.stderr_ == doctest::Approx(2.0).epsilon(0.3));

  CHECK_THROWS(mc_kl(normal_logpdf(0, 1), normal_logpdf(0, 1), sampler(0, 1), 99, 1));
  auto bad = [](const std::vector<double>&) { return std::log(-1.0); };
  CHECK_THROWS_AS(mc_kl(bad, normal_logpdf(0, 1), sampler(0, 1), 100, 1), NumericError);
}

TEST_CASE("mode statistics") {
  const std::vector<std::vector<double>> means{{-2, 0}, {2, 0}};
  auto at_first = mode_stats(Tensor({5, 2}, 0.0), {{0, 0}, {4, 0}}, 0.3);
  CHECK(at_first.uncertainty == 0.0);
  CHECK(at_first.proportions == std::vector<double>{1.0, 0.0});

  auto far = mode_stats(Tensor::matrix({{0, 3}}), means, 0.3);
  CHECK(far.uncertainty == 1.0);
  CHECK(far.confident == 0);

  auto balanced = mode_stats(Tensor::matrix({{-2, 0}, {2, 0}, {-2, 0}, {2, 0}}), means, 0.3);
  CHECK(balanced.proportions == std::vector<double>{0.5, 0.5});
  CHECK(balanced.n == 4);

  auto edge = mode_stats(Tensor::matrix({{-2 + 0.8, 0}, {2 + 1.0, 0}}), means, 0.3);
  CHECK(edge.uncertainty == 0.5);
}

TEST_CASE("metric report lines") {
  MetricReport r{"energy", 0.125, 0.01, 2000, {}};
  r.details["shape"] = "circle";
  const std::string line = r.to_json_line();
  CHECK(line == R"({"name":"energy","value":0.125,"stderr":0.01,"n":2000,"details":{"shape":"circle"}})");
  auto back = metric_report_from_json(nlohmann::ordered_json::parse(line));
  CHECK(back.name == "energy");
  CHECK(back.stderr_ == 0.01);
  MetricReport plain{"hoyer", 0.5, std::nullopt, 10, {}};
  CHECK(plain.to_json_line().find("stderr") == std::string::npos);
  std::ostringstream out;
  write_reports(out, {r, plain});
  const std::string text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}
