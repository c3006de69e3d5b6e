#include <fstream>
#include <set>
#include <sstream>

#include "intel_latent/checkpoint.hpp"
#include "intel_latent/cli.hpp"
#include "intel_latent/errors.hpp"

namespace intel_latent::cli {

using Json = nlohmann::ordered_json;

namespace {

void check_keys(const Json& j, std::string_view where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw UsageError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw UsageError(std::string(where) + "." + key + ": unknown field");
  }
}

template <class T>
void read(const Json& j, std::string_view key, std::string_view where, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(std::string(key)).template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw UsageError(std::string(where) + "." + std::string(key) + ": wrong type (" +
                     std::string(j.at(std::string(key)).type_name()) + ")");
  }
}

DataSource dataset_from_json(const Json& j) {
  constexpr std::string_view where = "dataset";
  DataSource src;
  if (!j.is_object()) throw UsageError("dataset: expected an object");
  std::string shape = "circle";
  read(j, "shape", where, shape);
  if (shape == "csv") {
    check_keys(j, where, {"shape", "path"});
    src.kind = DataSource::Kind::csv;
    std::string path;
    read(j, "path", where, path);
    if (path.empty()) throw UsageError("dataset.path: required for csv data");
    src.path = path;
    return src;
  }
  if (shape == "idx") {
    check_keys(j, where, {"shape", "path", "labels_path", "classes", "threshold", "downsample"});
    src.kind = DataSource::Kind::idx;
    std::string path, labels;
    read(j, "path", where, path);
    if (path.empty()) throw UsageError("dataset.path: required for idx data");
    src.path = path;
    read(j, "labels_path", where, labels);
    src.idx.labels_path = labels;
    if (j.contains("classes")) {
      std::vector<int> classes;
      read(j, "classes", where, classes);
      src.idx.class_filter = std::set<int>(classes.begin(), classes.end());
    }
    read(j, "threshold", where, src.idx.binarize_threshold);
    read(j, "downsample", where, src.idx.downsample);
    return src;
  }
  check_keys(j, where, {"shape", "n", "noise_std", "seed", "star_points", "mixture"});
  auto& s = src.synthetic;
  try {
    s.shape = synth::data_shape_from_string(shape);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("dataset.shape: ") + e.what() + " (or csv, idx)");
  }
  read(j, "n", where, s.n);
  read(j, "noise_std", where, s.noise_std);
  read(j, "seed", where, s.seed);
  read(j, "star_points", where, s.star_points);
  if (j.contains("mixture")) {
    const auto& m = j.at("mixture");
    check_keys(m, "dataset.mixture", {"means", "stds", "weights"});
    read(m, "means", "dataset.mixture", s.mixture.means);
    read(m, "stds", "dataset.mixture", s.mixture.stds);
    read(m, "weights", "dataset.mixture", s.mixture.weights);
  }
  return src;
}

Json dataset_to_json(const DataSource& src) {
  Json j;
  switch (src.kind) {
    case DataSource::Kind::csv:
      j["shape"] = "csv";
      j["path"] = src.path.string();
      break;
    case DataSource::Kind::idx:
      j["shape"] = "idx";
      j["path"] = src.path.string();
      if (!src.idx.labels_path.empty()) j["labels_path"] = src.idx.labels_path.string();
      if (src.idx.class_filter) j["classes"] = std::vector<int>(src.idx.class_filter->begin(), src.idx.class_filter->end());
      j["threshold"] = src.idx.binarize_threshold;
      j["downsample"] = src.idx.downsample;
      break;
    case DataSource::Kind::synthetic: {
      const auto& s = src.synthetic;
      j["shape"] = std::string(synth::to_string(s.shape));
      j["n"] = s.n;
      j["noise_std"] = s.noise_std;
      j["seed"] = s.seed;
      if (s.shape == synth::DataShape::star) j["star_points"] = s.star_points;
      if (s.shape == synth::DataShape::mog) {
        j["mixture"] = Json{{"means", s.mixture.means}, {"stds", s.mixture.stds}, {"weights", s.mixture.weights}};
      }
      break;
    }
  }
  return j;
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  check_keys(j, "config", {"schema_version", "dataset", "model", "optimizer", "eval", "seed", "output_dir"});
  ExperimentConfig c;
  if (!j.contains("schema_version")) throw UsageError("config.schema_version: missing field");
  read(j, "schema_version", "config", c.schema_version);
  if (c.schema_version != kSchemaVersion) {
    throw UsageError("config.schema_version: unsupported version " + std::to_string(c.schema_version) +
                     " (expected " + std::to_string(kSchemaVersion) + ")");
  }
  read(j, "seed", "config", c.seed);
  std::string out_dir = c.output_dir.string();
  read(j, "output_dir", "config", out_dir);
  c.output_dir = out_dir;
  if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"));
  if (j.contains("model")) {
    try {
      c.model = vae::model_config_from_json(j.at("model"));
    } catch (const FormatError& e) {
      throw UsageError(e.what());
    }
  }
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    constexpr std::string_view where = "optimizer";
    check_keys(o, where, {"lr", "batch_size", "epochs", "beta_kl", "gamma_sparsity", "penalty_orientation"});
    read(o, "lr", where, c.optimizer.lr);
    read(o, "batch_size", where, c.optimizer.batch_size);
    read(o, "epochs", where, c.optimizer.epochs);
    read(o, "beta_kl", where, c.optimizer.beta_kl);
    read(o, "gamma_sparsity", where, c.optimizer.gamma_sparsity);
    if (o.contains("penalty_orientation")) {
      std::string name;
      read(o, "penalty_orientation", where, name);
      try {
        c.optimizer.orientation = vae::orientation_from_string(name);
      } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("optimizer.penalty_orientation: ") + e.what());
      }
    }
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    constexpr std::string_view where = "eval";
    check_keys(e, where, {"metrics", "n_generate", "modes", "mode_std", "band"});
    read(e, "metrics", where, c.eval.metrics);
    read(e, "n_generate", where, c.eval.n_generate);
    read(e, "modes", where, c.eval.modes);
    read(e, "mode_std", where, c.eval.mode_std);
    read(e, "band", where, c.eval.band);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(path.string() + ": not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["schema_version"] = c.schema_version;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();
  j["dataset"] = dataset_to_json(c.dataset);
  j["model"] = vae::model_config_to_json(c.model);
  j["optimizer"] = Json{{"lr", c.optimizer.lr},
                        {"batch_size", c.optimizer.batch_size},
                        {"epochs", c.optimizer.epochs},
                        {"beta_kl", c.optimizer.beta_kl},
                        {"gamma_sparsity", c.optimizer.gamma_sparsity},
                        {"penalty_orientation", std::string(vae::to_string(c.optimizer.orientation))}};
  j["eval"] = Json{{"metrics", c.eval.metrics},
                   {"n_generate", c.eval.n_generate},
                   {"modes", c.eval.modes},
                   {"mode_std", c.eval.mode_std},
                   {"band", c.eval.band}};
  return j;
}

synth::LabeledBatch load_dataset(const DataSource& source) {
  switch (source.kind) {
    case DataSource::Kind::csv:
      return synth::read_csv(source.path);
    case DataSource::Kind::idx:
      return synth::load_idx(source.path, source.idx);
    case DataSource::Kind::synthetic:
      break;
  }
  return synth::gen_synthetic(source.synthetic);
}

}  // namespace intel_latent::cli
