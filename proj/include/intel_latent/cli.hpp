#pragma once

// Command-line front end. Subcommands:
//   gen-data        write a synthetic dataset as CSV
//   train           fit a model; writes checkpoint.json and train_report.json
//   generate        sample from a checkpoint; writes sample and latent CSVs
//   eval            metric report lines (hoyer, energy, modes, recon)
//   check-theorem   run the divergence checks
//   sweep           train + eval over a list of sparsity weights
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "intel_latent/synthdata.hpp"
#include "intel_latent/vae.hpp"

namespace intel_latent::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr int kSchemaVersion = 1;

/// Bad flags, bad config fields, or outputs that already exist.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Where training data comes from: a generator spec, a CSV file, or IDX.
struct DataSource {
  enum class Kind { synthetic, csv, idx };
  Kind kind = Kind::synthetic;
  synth::DatasetSpec synthetic;
  std::filesystem::path path;
  synth::IdxOptions idx;
};

struct OptimizerConfig {
  double lr = 1e-3;
  std::size_t batch_size = 100;
  std::size_t epochs = 200;
  double beta_kl = 1.0;
  double gamma_sparsity = 0.0;
  vae::PenaltyOrientation orientation = vae::PenaltyOrientation::diversity;
};

struct EvalConfig {
  std::vector<std::string> metrics{"hoyer", "energy", "recon"};
  std::size_t n_generate = 2000;
  std::vector<std::vector<double>> modes;  // for "modes"
  double mode_std = 0.3;
  double band = 3.0;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  DataSource dataset;
  vae::ModelConfig model;
  OptimizerConfig optimizer;
  EvalConfig eval;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = ".";
};

/// Parse a config document; unknown or mistyped fields raise UsageError
/// naming the field.
ExperimentConfig config_from_json(const nlohmann::ordered_json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);

synth::LabeledBatch load_dataset(const DataSource& source);

/// Entry point: args excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, char** argv);

}  // namespace intel_latent::cli
