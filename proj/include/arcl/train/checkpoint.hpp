#pragma once

#include <filesystem>

#include "json.hpp"

#include "arcl/numcore/graph.hpp"
#include "arcl/train/network.hpp"

namespace arcl::train {

struct Checkpoint {
  TensorMap parameters;
  nlohmann::json metadata;
};

/// Writes `manifest` (JSON: shapes and offsets per parameter, plus metadata)
/// and a sibling blob "<stem>.bin" of little-endian 64-bit doubles.
void save_checkpoint(const std::filesystem::path& manifest, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& manifest);

/// Model round trip; network specs travel in the metadata under "model".
void save_model(const std::filesystem::path& manifest, const Model& model, nlohmann::json metadata = nlohmann::json::object());
Model load_model(const std::filesystem::path& manifest);

}  // namespace arcl::train
