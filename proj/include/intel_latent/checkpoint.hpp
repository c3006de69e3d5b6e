#pragma once

// Versioned JSON checkpoints. Doubles are written in shortest round-trip
// form, so save -> load reproduces every parameter bit for bit.
//
//   {"format_version": 1,
//    "model":  {dim_x, dim_y, encoder_hidden, decoder_hidden, likelihood,
//               sigma_x, mapping: {kind, ...}},
//    "params": {"<name>": {"shape": [...], "data": [...]}, ...}}

#include <filesystem>
#include <string>

#include "json.hpp"

#include "intel_latent/vae.hpp"

namespace intel_latent::vae {

using Json = nlohmann::ordered_json;

inline constexpr int kCheckpointFormatVersion = 1;

Json mapping_to_json(const mappings::MappingSpec& spec);
/// Throws FormatError naming the offending field.
mappings::MappingSpec mapping_from_json(const Json& j, std::size_t dim_y);

Json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const Json& j);

Json params_to_json(const NamedTensors& params);
NamedTensors params_from_json(const Json& j);

std::string checkpoint_to_string(const VaeModel& model);
VaeModel checkpoint_from_string(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const VaeModel& model);
VaeModel load_checkpoint(const std::filesystem::path& path);

}  // namespace intel_latent::vae
