#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arcl/numcore/tensor.hpp"
#include "json.hpp"

namespace arcl::data {

/// n samples of dimension d with optional class labels in [0, K).
struct Dataset {
  Tensor samples;  // n x d
  std::optional<std::vector<std::size_t>> labels;
  std::size_t class_count = 0;
  /// Generator description echoed into file metadata.
  nlohmann::json generator = nlohmann::json::object();
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return samples.rows(); }
  std::size_t dim() const noexcept { return samples.cols(); }
  bool labeled() const noexcept { return labels.has_value(); }
  std::size_t label(std::size_t i) const { return labels->at(i); }

  /// Throws InvalidArgument if any invariant is violated.
  void validate() const;

  /// Rows selected by index, labels carried along.
  Dataset subset(const std::vector<std::size_t>& rows) const;
  /// Sample indices per class.
  std::vector<std::vector<std::size_t>> class_members() const;
};

/// Parses `#JSON{...}` + CSV rows `x_1,...,x_d[,label]`.
Dataset read_dataset(const std::string& path);
Dataset parse_dataset(const std::string& text);

/// Serializes with a one-line metadata header. `extra` keys are merged into
/// the header object.
std::string format_dataset(const Dataset& ds, const nlohmann::json& extra = nlohmann::json::object());
void write_dataset(const std::string& path, const Dataset& ds, const nlohmann::json& extra = nlohmann::json::object());

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace arcl::data
