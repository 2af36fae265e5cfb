#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "arcl/data/dataset.hpp"
#include "arcl/data/family.hpp"
#include "arcl/losses/objectives.hpp"
#include "arcl/numcore/error.hpp"
#include "arcl/numcore/graph.hpp"
#include "arcl/train/network.hpp"
#include "arcl/train/optimizer.hpp"

namespace arcl::train {

struct OptConfig {
  double lr = 0.05;
  LrSchedule schedule = LrSchedule::kConstant;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static OptConfig from_json(const nlohmann::json& j);
};

struct MoCoConfig {
  std::size_t queue_capacity = 512;
  double key_momentum = 0.99;
  bool enqueue_all_views = false;

  nlohmann::json to_json() const;
  static MoCoConfig from_json(const nlohmann::json& j);
};

struct MonitorConfig {
  /// Samples (from the front of the dataset) used for the per-epoch
  /// L_AR and alignment estimates; 0 disables monitoring.
  std::size_t samples = 256;
  /// Views for the L_AR estimate; 0 means the loss spec's m.
  std::size_t views = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;       // mean batch loss over the epoch
  double ar_hat = 0.0;     // empirical L_AR of the encoder on the monitor set
  double alignment = 0.0;  // alignment estimate of the encoder on the monitor set
  double lr = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochRecord> history;
  /// Populated for the MoCo objective.
  MoCoState moco;
};

/// State at the moment training produced a non-finite value.
struct DivergenceSnapshot {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double lr = 0.0;
  std::map<std::string, double> parameter_norms;
  std::string detail;

  nlohmann::json to_json() const;
};

class TrainingDiverged : public NumericalError {
 public:
  explicit TrainingDiverged(DivergenceSnapshot snapshot);
  const DivergenceSnapshot& snapshot() const noexcept { return snapshot_; }

 private:
  DivergenceSnapshot snapshot_;
};

/// One-batch loss graph. Inputs: "views" ((N*m) x d rows, view j of sample i
/// at row i*m + j) and, for MoCo, "queue" (Q x p). MoCo key parameters are
/// graph parameters under the "key." prefix behind a stop-gradient.
struct TrainingGraph {
  Graph graph;
  losses::ObjectiveNodes nodes;
  NodeId query_embedding = 0;
  NodeId key_embedding = 0;
};

TrainingGraph build_training_graph(const Model& model, std::size_t n, const losses::LossSpec& spec,
                                   std::size_t queue_size = 0);

/// Key-branch parameters named as in the training graph.
TensorMap key_parameters(const Model& model);

/// Runs opt.epochs epochs of shuffled mini-batches. A final partial batch is
/// used when it has at least two samples. Throws TrainingDiverged on a
/// non-finite loss, gradient or parameter.
TrainResult train(Model model, const data::Dataset& dataset, const data::TransformationFamily& family,
                  const losses::LossSpec& spec, const OptConfig& opt, const MoCoConfig& moco = {},
                  const MonitorConfig& monitor = {});

/// CSV with header epoch,loss,ar_hat,alignment,lr.
void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace arcl::train
