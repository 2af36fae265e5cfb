#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "arcl/cli/config.hpp"
#include "arcl/data/dataset.hpp"
#include "arcl/eval/bounds.hpp"
#include "arcl/losses/alignment.hpp"
#include "arcl/train/network.hpp"

namespace arcl::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitSchema = 2,
  kExitNumerical = 3,
  kExitBound = 4,
};

/// Entry point of the `arcl` executable. Diagnostics go to `err`, the list
/// of written files to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------
// Pipeline stages, shared by the commands and the tests.

/// Training data (stage seed "data").
data::Dataset training_data(const ExperimentConfig& config);
/// Evaluation base data (stage seed "eval-data"), subset to `samples` rows
/// when samples > 0.
data::Dataset evaluation_data(const ExperimentConfig& config, std::size_t samples = 0);

/// Initialized (stage "init") and trained (stage "train") model.
train::TrainResult run_training(const ExperimentConfig& config);

losses::FeatureMap feature_map(const ExperimentConfig& config, const train::Model& model);

/// Probe accuracy on one domain: head fitted on one draw, scored on another.
struct DomainAccuracy {
  std::string name;
  std::string kind;  // "transformation" or "dataset"
  std::size_t fit_size = 0;
  std::size_t test_size = 0;
  double fit_accuracy = 0.0;
  double test_accuracy = 0.0;
  double test_square_risk = 0.0;
};

struct ProbeSummary {
  std::vector<DomainAccuracy> domains;
  double worst_accuracy = 1.0;
  /// Own-head and transfer risks over the transformation domains, if any.
  std::optional<eval::DomainRiskReport> transfer;
  nlohmann::json to_json() const;
};

ProbeSummary probe_domains(const ExperimentConfig& config, const train::Model& model);

/// Per-method, per-domain test accuracy averaged over seeds.
struct ComparisonRow {
  std::string method;
  std::string domain;  // a domain name, or "worst"
  std::size_t seeds = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one seed
  std::vector<double> values;
};

struct ComparisonTable {
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> config_hashes;
  std::vector<ComparisonRow> rows;
  const ComparisonRow& row(const std::string& method, const std::string& domain) const;
  nlohmann::json to_json() const;
  /// Long format: method,domain,seeds,mean_accuracy,std_accuracy.
  void write_csv(std::ostream& out) const;
};

/// Trains and probes every config under every master seed. Methods keep the
/// order of `configs`; their labels must be distinct.
ComparisonTable compare_runs(const std::vector<ExperimentConfig>& configs, const std::vector<std::uint64_t>& seeds);

/// Finite version of the config's family for exact worst-case quantities.
data::TransformationFamily finite_family(const ExperimentConfig& config);

}  // namespace arcl::cli
