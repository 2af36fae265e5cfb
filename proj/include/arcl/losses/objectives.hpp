#pragma once

#include <string>
#include <utility>
#include <vector>

#include "arcl/numcore/graph.hpp"
#include "arcl/numcore/tensor.hpp"

namespace arcl::losses {

enum class Objective { kInfoNCE, kArCL, kAAL, kMoCoArCL };

const char* objective_name(Objective o);
Objective parse_objective(const std::string& name);

struct LossSpec {
  Objective objective = Objective::kArCL;
  double temperature = 0.5;
  std::size_t views = 2;
  /// Weight on the log-sum-exp (uniformity) term. 1 gives the usual
  /// composite InfoNCE form.
  double lambda_reg = 1.0;

  /// Throws InvalidArgument when the combination is invalid.
  void validate() const;
};

/// Projected, unit-norm views z_{i,j}: shape N x m x p.
struct ViewBatch {
  Tensor embeddings;
  std::vector<std::size_t> origin_ids;

  std::size_t samples() const { return embeddings.shape().at(0); }
  std::size_t views() const { return embeddings.shape().at(1); }
  std::size_t dim() const { return embeddings.shape().at(2); }
  /// Flattened (N*m) x p matrix, row i*m + j holding view j of sample i.
  Tensor rows() const { return embeddings.reshaped({samples() * views(), dim()}); }

  /// Builds a batch from N*m rows (normalizing is the caller's job).
  static ViewBatch from_rows(const Tensor& rows, std::size_t n, std::size_t m);
  void validate() const;
};

/// Itemized batch loss: total = lambda * uniformity - alignment where
/// alignment = mean_i s_i^+ / tau and uniformity = mean_i log sum_neg exp(s^-/tau).
struct BatchLoss {
  double total = 0.0;
  double alignment = 0.0;
  double uniformity = 0.0;
  std::vector<double> positive;                              // s_i^+
  std::vector<std::pair<std::size_t, std::size_t>> selected;  // worst pair (j, k) per sample, ArCL forms only
};

// ---------------------------------------------------------------------------
// Graph fragments shared by the batch functions and the training loop.

enum class PairSet {
  kUnordered,  // j < k, single-branch symmetric similarities
  kOrdered,    // j != k, two-branch similarities
};

/// Flat indices into the (N*m) x (N*m) similarity matrix for the positive
/// pairs of each sample.
IndexGroups positive_groups(std::size_t n, std::size_t m, PairSet pairs);

/// Negatives of sample i: first view of i against views 1 and 2 of every
/// other sample (2N - 2 entries).
IndexGroups simclr_negative_groups(std::size_t n, std::size_t m);

/// Negatives of sample i: first view of i against every queue entry, as flat
/// indices into the (N*m) x Q similarity matrix.
IndexGroups queue_negative_groups(std::size_t n, std::size_t m, std::size_t queue_size);

struct ObjectiveNodes {
  NodeId loss;
  NodeId positive;     // s^+, length N
  NodeId uniformity;   // per-sample log-sum-exp, length N
  NodeId alignment_term;
  NodeId uniformity_term;
};

/// Appends the single-branch objective (InfoNCE / ArCL / AAL) on top of a
/// node holding unit-norm rows z, (N*m) x p.
ObjectiveNodes add_simclr_objective(GraphBuilder& b, NodeId z, std::size_t n, const LossSpec& spec);

/// Appends the MoCo + ArCL objective: query rows zq (trainable), key rows
/// zk and queue entries (both behind stop-gradient).
ObjectiveNodes add_moco_objective(GraphBuilder& b, NodeId zq, NodeId zk, NodeId queue, std::size_t n,
                                  const LossSpec& spec);

// ---------------------------------------------------------------------------
// Batch losses on fixed embeddings.

/// Two-view InfoNCE; N >= 2.
BatchLoss infonce_batch(const ViewBatch& views, double temperature);
/// Worst-pair positive similarity (minimum cosine over view pairs).
BatchLoss arcl_batch(const ViewBatch& views, double temperature);
/// Average positive similarity over unordered view pairs.
BatchLoss aal_batch(const ViewBatch& views, double temperature);
/// Two-branch worst-pair loss with queue negatives.
BatchLoss moco_arcl_batch(const ViewBatch& query, const ViewBatch& key, const Tensor& queue, double temperature);

/// Dispatches on spec.objective for the single-branch objectives.
BatchLoss batch_loss(const ViewBatch& views, const LossSpec& spec);

}  // namespace arcl::losses
