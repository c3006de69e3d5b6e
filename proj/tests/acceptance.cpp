// Acceptance run: one PASS/FAIL line per criterion, per-seed details
// indented underneath. Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "intel_latent/cli.hpp"
#include "intel_latent/divergence.hpp"
#include "intel_latent/gradcheck.hpp"
#include "intel_latent/mappings.hpp"
#include "intel_latent/metrics.hpp"
#include "intel_latent/synthdata.hpp"
#include "intel_latent/vae.hpp"
#include "mapping_helpers.hpp"
#include "random_graph.hpp"

using namespace intel_latent;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Tensor dataset(synth::DatasetSpec spec) { return synth::gen_synthetic(spec).samples; }

synth::DatasetSpec shape_spec(synth::DataShape shape, std::size_t n, std::uint64_t seed) {
  synth::DatasetSpec s;
  s.shape = shape;
  s.n = n;
  s.seed = seed;
  return s;
}

// Defaults shared by every training criterion: dim_y 2, 10-10-10 MLPs,
// Gaussian likelihood (sigma_x 0.1), Adam 1e-3, batch 100, 200 epochs.
// Model weights use `seed`, minibatch order and noise use seed + 1.
vae::VaeModel fit(const Tensor& data, mappings::MappingSpec mapping, std::uint64_t seed, double gamma = 0.0) {
  vae::ModelConfig c;
  c.dim_x = data.shape()[1];
  c.mapping = std::move(mapping);
  vae::VaeModel m = vae::make_model(c, seed);
  vae::TrainConfig tc;
  tc.objective.gamma = gamma;
  tc.seed = seed + 1;
  vae::train(m, data, tc);
  return m;
}

Outcome gradient_suite() {
  Rng rng(1);
  diff::GradCheckResult worst;
  std::string worst_ops;
  int over = 0;
  for (int i = 0; i < 50; ++i) {
    diff::Tape tape;
    auto g = testing::build_random_graph(tape, rng);
    const auto r = diff::finite_diff_check(tape, g.output, g.bindings, 1e-5);
    over += r.max_relative_error >= 1e-4;
    if (r.max_relative_error > worst.max_relative_error) {
      worst = r;
      worst_ops.clear();
      for (const auto& op : g.ops) worst_ops += " " + op;
    }
  }
  return {worst.max_relative_error < 1e-4,
          fmt("50 random graphs, max relative error %.3g (< 1e-4), %d graphs over", worst.max_relative_error, over),
          {"worst graph:" + worst_ops,
           fmt("worst entry %s[%zu]: analytic %.6e, numeric %.6e", worst.worst_leaf.c_str(), worst.worst_index,
               worst.worst_analytic, worst.worst_numeric)}};
}

Outcome theorem_equality() {
  auto sweep = divergence::affine_invariance_sweep(100, 3, 2);
  auto elbo = divergence::check_elbo_equivalence(divergence::toy_elbo_instance(0.5, 100000, 3));
  const bool ok = sweep.max_delta < 1e-9 && elbo.delta < 3 * elbo.stderr_;
  return {ok,
          fmt("affine max |delta| %.3g (< 1e-9); ELBO |delta| %.3g vs 3 stderr %.3g", sweep.max_delta, elbo.delta,
              3 * elbo.stderr_),
          {fmt("ELBO_Y %.6f, Z-space ELBO %.6f, KL on Y %.6f, KL on Z %.6f +- %.6f, max per-draw gap %.3g", elbo.lhs,
               elbo.rhs, elbo.kl_y, elbo.kl_z, elbo.kl_z_stderr, elbo.max_sample_gap)}};
}

Outcome theorem_inequality() {
  auto s = divergence::marginal_inequality_sweep(1000, 4);
  return {s.violations == 0 && s.strict_missed == 0,
          fmt("1000 diagonal Gaussians: %zu violations, %zu/%zu strict cases missed", s.violations, s.strict_missed,
              s.strict_expected),
          {}};
}

Outcome hoyer_exactness() {
  Tensor one_hot({100, 5}, 0.0);
  for (std::size_t r = 0; r < 100; ++r) one_hot.at(r, (3 * r) % 5) = 0.5 + r;
  const double h1 = metrics::hoyer_score(one_hot);
  const double h0 = metrics::hoyer_score(Tensor({100, 5}, 0.7));
  Rng rng(5);
  Tensor z = testing::random_tensor(rng, {300, 6});
  Tensor scaled = z;
  for (std::size_t c = 0; c < 6; ++c) {
    const double s = std::exp(1.5 * rng.normal());
    for (std::size_t r = 0; r < 300; ++r) scaled.at(r, c) *= s;
  }
  const double drift = std::fabs(metrics::hoyer_score(z) - metrics::hoyer_score(scaled));
  const bool ok = std::fabs(h1 - 1) < 5e-4 && std::fabs(h0) < 5e-4 && drift < 1e-12;
  return {ok, fmt("one-hot %.3f, dense %.3f, scaling drift %.2g (< 1e-12)", h1, h0, drift), {}};
}

Outcome circle_topology() {
  const Tensor train = dataset(shape_spec(synth::DataShape::circle, 10000, 11));
  const Tensor held = dataset(shape_spec(synth::DataShape::circle, 5000, 12));
  int wins = 0;
  double worst_norm_dev = 0;
  Outcome o;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto intel = fit(train, mappings::radial_mapping(), seed);
    auto vanilla = fit(train, mappings::identity_mapping(), seed);
    const Tensor z = vae::represent(intel, train);
    double dev = 0;
    for (std::size_t r = 0; r < z.shape()[0]; ++r) dev += std::fabs(std::hypot(z.at(r, 0), z.at(r, 1)) - 1);
    dev /= z.shape()[0];
    worst_norm_dev = std::max(worst_norm_dev, dev);
    const double e_intel = metrics::energy_distance(vae::generate(intel, 5000, 100 + seed).samples, held);
    const double e_vanilla = metrics::energy_distance(vae::generate(vanilla, 5000, 100 + seed).samples, held);
    wins += e_intel < e_vanilla;
    o.details.push_back(fmt("seed %llu: energy InteL %.5f vs vanilla %.5f, mean | |z| - 1 | %.2e",
                            static_cast<unsigned long long>(seed), e_intel, e_vanilla, dev));
  }
  o.pass = wins >= 4 && worst_norm_dev < 1e-2;
  o.summary = fmt("radial beats identity on energy distance in %d/5 seeds (>= 4); max mean | |z| - 1 | %.2e (< 1e-2)",
                  wins, worst_norm_dev);
  return o;
}

Outcome mixture_gap() {
  const Tensor train = dataset(shape_spec(synth::DataShape::mog, 10000, 21));
  const std::vector<std::vector<double>> means{{-2, 0}, {2, 0}};
  int wins = 0;
  bool balanced = true;
  Outcome o;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto intel = fit(train, mappings::clustered_mapping(2), seed);
    auto vanilla = fit(train, mappings::identity_mapping(), seed);
    auto mi = metrics::mode_stats(vae::generate(intel, 5000, 200 + seed).samples, means, 0.3);
    auto mv = metrics::mode_stats(vae::generate(vanilla, 5000, 200 + seed).samples, means, 0.3);
    wins += mi.uncertainty < mv.uncertainty;
    for (double p : mi.proportions) balanced = balanced && std::fabs(p - 0.5) <= 0.1;
    o.details.push_back(fmt("seed %llu: uncertain InteL %.4f vs vanilla %.4f; InteL proportions (%.3f, %.3f)",
                            static_cast<unsigned long long>(seed), mi.uncertainty, mv.uncertainty, mi.proportions[0],
                            mi.proportions[1]));
  }
  o.pass = wins >= 4 && balanced;
  o.summary = fmt("clustered less uncertain than vanilla in %d/5 seeds (>= 4); proportions within 0.1 of 0.5: %s", wins,
                  balanced ? "yes" : "no");
  return o;
}

Outcome learned_proportions() {
  auto spec = shape_spec(synth::DataShape::mog, 10000, 31);
  spec.mixture.weights = {0.25, 0.75};
  const Tensor train = dataset(spec);
  std::vector<double> minority;
  Outcome o;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto m = fit(train, mappings::clustered_mapping(2, 5.0, 0.2, true), seed);
    auto ms = metrics::mode_stats(vae::generate(m, 5000, 300 + seed).samples, {{-2, 0}, {2, 0}}, 0.3);
    minority.push_back(ms.proportions[0]);
    const Tensor& u = m.params.at(std::string(mappings::kLogitsParam));
    const double s0 = 1.0 / (1.0 + std::exp(u[1] - u[0]));
    o.details.push_back(fmt("seed %llu: generated minority share %.3f; sector share softmax(u)_0 %.3f",
                            static_cast<unsigned long long>(seed), ms.proportions[0], s0));
  }
  const double med = median(minority);
  o.pass = std::fabs(med - 0.25) <= 0.10;
  o.summary = fmt("median minority proportion %.3f (target 0.25 +- 0.10)", med);
  return o;
}

struct SparsityRuns {
  std::vector<double> h0, h30, r0, r30;
};

SparsityRuns sparsity_runs(const Tensor& data, const std::function<mappings::MappingSpec()>& mapping) {
  SparsityRuns s;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (double gamma : {0.0, 30.0}) {
      auto m = fit(data, mapping(), seed, gamma);
      const double h = metrics::hoyer_score(vae::represent(m, data));
      const double r = vae::mean_reconstruction(m, data);
      (gamma == 0.0 ? s.h0 : s.h30).push_back(h);
      (gamma == 0.0 ? s.r0 : s.r30).push_back(r);
    }
  }
  return s;
}

const Tensor& sparse_data() {
  static const Tensor data = dataset(shape_spec(synth::DataShape::sparse2d, 10000, 41));
  return data;
}

const SparsityRuns& sparse_runs() {
  static const SparsityRuns runs = sparsity_runs(sparse_data(), [] { return mappings::sparse_mapping(2); });
  return runs;
}

Outcome sparsity_monotonicity() {
  const auto& s = sparse_runs();
  const double h0 = median(s.h0), h30 = median(s.h30), r0 = median(s.r0), r30 = median(s.r30);
  const double degradation = (r0 - r30) / std::fabs(r0);
  Outcome o;
  o.pass = h30 > h0 + 0.10 && degradation < 0.20;
  o.summary = fmt("median Hoyer %.3f -> %.3f (need +0.10); recon log-lik %.3f -> %.3f, relative loss %.1f%% (< 20%%)",
                  h0, h30, r0, r30, 100 * degradation);
  for (std::size_t i = 0; i < s.h0.size(); ++i)
    o.details.push_back(fmt("seed %zu: Hoyer %.3f -> %.3f, recon %.3f -> %.3f", i, s.h0[i], s.h30[i], s.r0[i], s.r30[i]));
  return o;
}

Outcome ablation() {
  const auto& sp = sparse_runs();
  const auto id = sparsity_runs(sparse_data(), [] { return mappings::identity_mapping(); });
  const double d_id = median(id.h30) - median(id.h0);
  const double d_sp = median(sp.h30) - median(sp.h0);
  Outcome o;
  o.pass = std::fabs(d_id) < 0.05 && d_sp > 0.10;
  o.summary = fmt("penalty without selector changes Hoyer by %+.3f (|.| < 0.05); with selector %+.3f (> 0.10)", d_id,
                  d_sp);
  for (std::size_t i = 0; i < id.h0.size(); ++i)
    o.details.push_back(fmt("identity seed %zu: Hoyer %.3f -> %.3f, recon %.3f -> %.3f", i, id.h0[i], id.h30[i],
                            id.r0[i], id.r30[i]));
  return o;
}

Outcome hierarchical_causality() {
  Rng rng(10);
  double worst = 0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t layers = 2 + rng.index(3);
    std::vector<std::size_t> dims;
    for (std::size_t j = 0; j < layers; ++j) dims.push_back(1 + rng.index(3));
    auto spec = mappings::hierarchical_mapping(dims);
    diff::NamedTensors params;
    mappings::initialize_mapping(spec, params, rng);
    std::size_t d = 0;
    for (auto v : dims) d += v;
    worst = std::max(worst, testing::hierarchical_upper_block(spec, params, testing::random_tensor(rng, {d})));
  }
  return {worst < 1e-6, fmt("20 random models, max |dz_i/dy_j| for j > i: %.3g (< 1e-6)", worst), {}};
}

Outcome glue_property() {
  auto spec = mappings::glue_mapping();
  const Tensor z = mappings::apply_mapping(spec, {}, Tensor::matrix({{0, 1}, {0, -1}}));
  const double gap = std::hypot(z.at(0, 0) - z.at(1, 0), z.at(0, 1) - z.at(1, 1));
  const std::vector<double> steps{1e-2, 1e-4, 1e-6, 1e-8};
  Rng rng(11);
  double worst_final = 0;
  for (int i = 0; i < 20; ++i) {
    auto gaps = testing::perturbation_gaps(spec, {}, testing::random_tensor(rng, {2}), testing::random_tensor(rng, {2}), steps);
    worst_final = std::max(worst_final, gaps.back());
  }
  auto at_pair = testing::perturbation_gaps(spec, {}, Tensor::vector({0, 1}), Tensor::vector({1, 0}), steps);
  worst_final = std::max(worst_final, at_pair.back());

  const auto printed = mappings::apply_mapping(mappings::glue_mapping(mappings::GlueVariant::printed), {},
                                               Tensor::matrix({{0, 1}, {0, -1}}));
  const double printed_gap = std::hypot(printed.at(0, 0) - printed.at(1, 0), printed.at(0, 1) - printed.at(1, 1));

  std::ifstream readme(fs::path(INTEL_LATENT_SOURCE_DIR) / "README.md");
  std::stringstream text;
  text << readme.rdbuf();
  const bool documented = text.str().find("Glue oracle") != std::string::npos;

  Outcome o;
  o.pass = gap < 1e-9 && worst_final < 1e-3 && documented;
  o.summary = fmt("glued pair gap %.2g (< 1e-9); perturbation gap at 1e-8 %.2g; oracle documented: %s", gap,
                  worst_final, documented ? "yes" : "no");
  o.details.push_back(fmt("printed formula leaves the pair %.4f apart", printed_gap));
  return o;
}

Outcome pipeline_determinism() {
  const fs::path dir = fs::temp_directory_path() / "intel_latent_acceptance_pipeline";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string d = (dir / "data.csv").string(), run_dir = (dir / "run").string();
  const std::vector<fs::path> files{dir / "data.csv", dir / "run/checkpoint.json", dir / "run/train_report.json",
                                    dir / "run/report.jsonl"};
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  auto once = [&]() {
    std::ostringstream out, err;
    int rc = 0;
    rc |= cli::run_command({"gen-data", "--shape", "star", "--n", "2000", "--seed", "5", "--noise", "0.01", "--out", d,
                            "--force"},
                           out, err);
    rc |= cli::run_command({"train", "--data", d, "--mapping", "clustered", "--k", "5", "--epochs", "20", "--seed", "3",
                            "--out-dir", run_dir, "--force"},
                           out, err);
    rc |= cli::run_command({"eval", "--checkpoint", run_dir + "/checkpoint.json", "--data", d, "--metrics",
                            "hoyer,energy,recon", "--out", run_dir + "/report.jsonl", "--force"},
                           out, err);
    std::vector<std::string> bytes;
    for (const auto& f : files) bytes.push_back(slurp(f));
    return std::pair{rc, bytes};
  };
  const auto [rc1, a] = once();
  const auto [rc2, b] = once();
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += !a[i].empty() && a[i] == b[i];
  fs::remove_all(dir);
  return {rc1 == 0 && rc2 == 0 && same == files.size(),
          fmt("gen-data -> train -> eval twice: %zu/%zu outputs byte-identical", same, files.size()),
          {}};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"gradient suite", gradient_suite},
      {"theorem equality", theorem_equality},
      {"theorem inequality", theorem_inequality},
      {"hoyer exactness", hoyer_exactness},
      {"circle topology", circle_topology},
      {"mixture gap", mixture_gap},
      {"learned proportions", learned_proportions},
      {"sparsity monotonicity", sparsity_monotonicity},
      {"ablation", ablation},
      {"hierarchical causality", hierarchical_causality},
      {"glue property", glue_property},
      {"pipeline determinism", pipeline_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what(), {}};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.summary.c_str(), secs);
    for (const auto& d : o.details) std::printf("        %s\n", d.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
