#include "intel_latent/checkpoint.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "intel_latent/errors.hpp"

namespace intel_latent::vae {

namespace {

template <class T>
T field(const Json& j, std::string_view key, std::string_view where) {
  const std::string name = std::string(where) + "." + std::string(key);
  if (!j.is_object()) throw FormatError(std::string(where) + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw FormatError(name + ": missing field");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(name + ": wrong type (" + std::string(it->type_name()) + ")");
  }
}

template <class T>
T field_or(const Json& j, std::string_view key, std::string_view where, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return field<T>(j, key, where);
}

template <class Fn>
auto named(std::string_view name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string(name) + ": " + e.what());
  }
}

Json mlp_to_json(const diff::Mlp& mlp) {
  Json acts = Json::array();
  for (auto a : mlp.activations) acts.push_back(std::string(diff::to_string(a)));
  return Json{{"prefix", mlp.prefix}, {"dims", mlp.dims}, {"activations", acts}};
}

diff::Mlp mlp_from_json(const Json& j, std::string_view where) {
  diff::Mlp mlp;
  mlp.prefix = field<std::string>(j, "prefix", where);
  mlp.dims = field<std::vector<std::size_t>>(j, "dims", where);
  for (const auto& a : field<std::vector<std::string>>(j, "activations", where)) {
    mlp.activations.push_back(named(std::string(where) + ".activations", [&] { return diff::activation_from_string(a); }));
  }
  named(where, [&] { mlp.validate(); return 0; });
  return mlp;
}

}  // namespace

Json mapping_to_json(const mappings::MappingSpec& spec) {
  using namespace mappings;
  Json j;
  j["kind"] = std::string(spec.name());
  if (const auto* m = std::get_if<RadialMapping>(&spec.kind)) {
    j["epsilon"] = m->epsilon;
  } else if (const auto* m = std::get_if<GlueMapping>(&spec.kind)) {
    j["holes"] = m->holes;
    j["epsilon"] = m->epsilon;
    j["variant"] = m->variant == GlueVariant::corrected ? "corrected" : "printed";
  } else if (const auto* m = std::get_if<ClusteredMapping>(&spec.kind)) {
    j["k"] = m->k;
    j["c1"] = m->c1;
    j["c2"] = m->c2;
    j["mode"] = m->mode == ClusterMode::sector ? "sector" : "axis";
    j["factors"] = m->factors;
    j["learnable_proportions"] = m->learnable_proportions;
    j["learnable_bias"] = m->learnable_bias;
  } else if (const auto* m = std::get_if<SparseMapping>(&spec.kind)) {
    j["selector"] = mlp_to_json(m->selector);
  } else if (const auto* m = std::get_if<HierarchicalMapping>(&spec.kind)) {
    j["layer_dims"] = m->layer_dims;
    Json cs = Json::array();
    for (const auto& c : m->combiners) cs.push_back(mlp_to_json(c));
    j["combiners"] = cs;
  }
  return j;
}

mappings::MappingSpec mapping_from_json(const Json& j, std::size_t dim_y) {
  using namespace mappings;
  constexpr std::string_view where = "mapping";
  const auto kind = field<std::string>(j, "kind", where);
  static const std::map<std::string, std::set<std::string>> allowed{
      {"identity", {}},
      {"radial", {"epsilon"}},
      {"glue", {"holes", "epsilon", "variant"}},
      {"clustered", {"k", "c1", "c2", "mode", "factors", "learnable_proportions", "learnable_bias"}},
      {"sparse", {"selector", "hidden"}},
      {"hierarchical", {"layer_dims", "combiners"}},
  };
  if (const auto it = allowed.find(kind); it != allowed.end()) {
    for (const auto& [key, value] : j.items()) {
      if (key != "kind" && !it->second.contains(key)) {
        throw FormatError("mapping." + key + ": unknown field for kind '" + kind + "'");
      }
    }
  }
  MappingSpec spec;
  if (kind == "identity") {
    spec = identity_mapping();
  } else if (kind == "radial") {
    spec = radial_mapping(field_or(j, "epsilon", where, 1e-4));
  } else if (kind == "glue") {
    const auto variant = field_or<std::string>(j, "variant", where, "corrected");
    if (variant != "corrected" && variant != "printed") {
      throw FormatError("mapping.variant: expected corrected or printed, got '" + variant + "'");
    }
    spec = glue_mapping(variant == "corrected" ? GlueVariant::corrected : GlueVariant::printed,
                        field_or(j, "epsilon", where, 1e-4), field_or(j, "holes", where, 2));
  } else if (kind == "clustered") {
    ClusteredMapping m;
    m.k = field<std::size_t>(j, "k", where);
    m.c1 = field_or(j, "c1", where, 5.0);
    m.c2 = field_or(j, "c2", where, 0.2);
    const auto mode = field_or<std::string>(j, "mode", where, "sector");
    if (mode != "sector" && mode != "axis") {
      throw FormatError("mapping.mode: expected sector or axis, got '" + mode + "'");
    }
    m.mode = mode == "sector" ? ClusterMode::sector : ClusterMode::axis;
    m.factors = field_or(j, "factors", where, std::vector<std::size_t>{});
    m.learnable_proportions = field_or(j, "learnable_proportions", where, false);
    m.learnable_bias = field_or(j, "learnable_bias", where, false);
    spec = MappingSpec{m};
  } else if (kind == "sparse") {
    if (j.contains("selector")) {
      spec = MappingSpec{SparseMapping{mlp_from_json(j["selector"], "mapping.selector")}};
    } else {
      spec = sparse_mapping(dim_y, field_or(j, "hidden", where, std::vector<std::size_t>{10, 10}));
    }
  } else if (kind == "hierarchical") {
    const auto dims = field<std::vector<std::size_t>>(j, "layer_dims", where);
    if (j.contains("combiners")) {
      HierarchicalMapping m;
      m.layer_dims = dims;
      for (const auto& c : field<Json>(j, "combiners", where)) {
        m.combiners.push_back(mlp_from_json(c, "mapping.combiners"));
      }
      spec = MappingSpec{m};
    } else {
      spec = hierarchical_mapping(dims);
    }
  } else {
    throw FormatError("mapping.kind: unknown '" + kind +
                      "' (expected identity, radial, glue, clustered, sparse or hierarchical)");
  }
  named(where, [&] { spec.validate(dim_y); return 0; });
  return spec;
}

Json model_config_to_json(const ModelConfig& config) {
  Json j;
  j["dim_x"] = config.dim_x;
  j["dim_y"] = config.dim_y;
  j["encoder_hidden"] = config.encoder_hidden;
  j["decoder_hidden"] = config.decoder_hidden;
  j["likelihood"] = std::string(to_string(config.likelihood));
  j["sigma_x"] = config.sigma_x;
  j["mapping"] = mapping_to_json(config.mapping);
  return j;
}

ModelConfig model_config_from_json(const Json& j) {
  constexpr std::string_view where = "model";
  if (!j.is_object()) throw FormatError("model: expected an object");
  static const std::set<std::string> allowed{"dim_x",      "dim_y",   "encoder_hidden", "decoder_hidden",
                                             "likelihood", "sigma_x", "mapping"};
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw FormatError("model." + key + ": unknown field");
  }
  ModelConfig c;
  c.dim_x = field_or(j, "dim_x", where, c.dim_x);
  c.dim_y = field_or(j, "dim_y", where, c.dim_y);
  c.encoder_hidden = field_or(j, "encoder_hidden", where, c.encoder_hidden);
  c.decoder_hidden = field_or(j, "decoder_hidden", where, c.decoder_hidden);
  if (j.contains("likelihood")) {
    const auto l = field<std::string>(j, "likelihood", where);
    c.likelihood = named("model.likelihood", [&] { return likelihood_from_string(l); });
  }
  c.sigma_x = field_or(j, "sigma_x", where, c.sigma_x);
  if (j.contains("mapping")) c.mapping = mapping_from_json(j["mapping"], c.dim_y);
  named(where, [&] { c.validate(); return 0; });
  return c;
}

Json params_to_json(const NamedTensors& params) {
  Json j = Json::object();
  for (const auto& [name, t] : params) {
    j[name] = Json{{"shape", t.shape()}, {"data", std::vector<double>(t.data().begin(), t.data().end())}};
  }
  return j;
}

NamedTensors params_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("params: expected an object");
  NamedTensors out;
  for (const auto& [name, entry] : j.items()) {
    const std::string where = "params." + name;
    auto shape = field<Shape>(entry, "shape", where);
    auto data = field<std::vector<double>>(entry, "data", where);
    out.emplace(name, named(where, [&] { return Tensor(std::move(shape), std::move(data)); }));
  }
  return out;
}

std::string checkpoint_to_string(const VaeModel& model) {
  Json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["model"] = model_config_to_json(model.config);
  j["params"] = params_to_json(model.params);
  return j.dump(1) + "\n";
}

VaeModel checkpoint_from_string(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  const int version = field<int>(j, "format_version", "checkpoint");
  if (version != kCheckpointFormatVersion) {
    throw FormatError("checkpoint.format_version: unsupported version " + std::to_string(version));
  }
  VaeModel model;
  model.config = model_config_from_json(field<Json>(j, "model", "checkpoint"));
  model.params = params_from_json(field<Json>(j, "params", "checkpoint"));
  const auto& c = model.config;
  model.encoder = diff::make_mlp("encoder", c.dim_x, c.encoder_hidden, 2 * c.dim_y);
  model.decoder = diff::make_mlp("decoder", c.dim_y, c.decoder_hidden, c.dim_x);
  // Every parameter the architecture expects must be present with the right shape.
  NamedTensors expected;
  Rng rng(0);
  model.encoder.initialize(expected, rng);
  model.decoder.initialize(expected, rng);
  mappings::initialize_mapping(c.mapping, expected, rng);
  for (const auto& [name, t] : expected) {
    const auto it = model.params.find(name);
    if (it == model.params.end()) throw FormatError("params." + name + ": missing");
    if (it->second.shape() != t.shape()) {
      throw FormatError("params." + name + ": shape " + shape_string(it->second.shape()) + ", expected " +
                        shape_string(t.shape()));
    }
  }
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const VaeModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << checkpoint_to_string(model);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

VaeModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

}  // namespace intel_latent::vae
