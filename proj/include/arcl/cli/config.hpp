#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "arcl/data/dataset.hpp"
#include "arcl/data/family.hpp"
#include "arcl/losses/objectives.hpp"
#include "arcl/train/network.hpp"
#include "arcl/train/trainer.hpp"

namespace arcl::cli {

inline constexpr const char* kConfigSchema = "arcl-experiment";
inline constexpr int kConfigVersion = 1;

/// Config document does not match the schema. Maps to exit code 2.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A bound check reported pass = false. Maps to exit code 4.
class BoundViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A named domain of the evaluation plan: either a member of the training
/// family applied to the evaluation data, or a separately generated dataset
/// (probe fitted on one draw, scored on a second draw).
struct DomainSpec {
  std::string name;
  std::optional<data::Parameter> theta;      // transformation domain
  std::optional<nlohmann::json> dataset;     // generated domain
};

struct DiagnosticsSpec {
  // finite version of the family for exact L_AR; empty -> family grid or
  // a uniform grid of `grid_size` points per parameter axis
  std::vector<data::Parameter> grid;
  std::size_t grid_size = 9;
  std::vector<std::size_t> views{2, 4, 8, 16, 32};
  std::size_t repeats = 100;
  std::string view_mode = "iid";
  double delta = 0.5;
  std::size_t transformation_samples = 16;
  double c1 = 1.0;
  double c2 = 1.0;
  std::size_t repetitions = 16;
  std::size_t alignment_pair_draws = 4;
  std::size_t samples = 256;  // evaluation subset size, 0 = all
  double epsilon = 0.04;
  std::size_t toy_n = 100000;
};

struct EvaluationSpec {
  std::optional<nlohmann::json> dataset;  // defaults to the training dataset spec
  std::string features = "encoder";       // encoder | embedding
  bool intercept = true;
  std::vector<DomainSpec> domains;
  DiagnosticsSpec diagnostics;
};

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  nlohmann::json dataset;
  nlohmann::json family_json;
  data::TransformationFamily family;
  train::NetworkSpec encoder;
  std::optional<train::NetworkSpec> projector;
  losses::LossSpec loss;
  train::OptConfig optimizer;
  train::MoCoConfig moco;
  train::MonitorConfig monitor;
  EvaluationSpec evaluation;
  std::string output;

  /// The validated document with defaults filled in, in canonical key order.
  nlohmann::json document;

  /// Parses and validates. Throws SchemaError.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);

  /// Replaces the master seed (and the canonical document's copy of it).
  void set_seed(std::uint64_t seed);
  /// Hex FNV-1a of the canonical document.
  std::string hash() const;
  /// Human-readable run label: `name`, or objective and view count.
  std::string label() const;

  std::uint64_t stage_seed(const std::string& stage) const;
};

std::string fnv1a_hex(const std::string& text);

losses::LossSpec loss_from_json(const nlohmann::json& j);
nlohmann::json loss_to_json(const losses::LossSpec& spec);

}  // namespace arcl::cli
