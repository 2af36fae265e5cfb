#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <vector>

#include "arcl/numcore/graph.hpp"
#include "arcl/numcore/tensor.hpp"

namespace arcl::train {

enum class LrSchedule { kConstant, kCosine };

/// Learning rate for `epoch` (0-based) of `epochs`; cosine decays from
/// `base` toward 0 without warm-up.
double learning_rate(LrSchedule schedule, double base, std::size_t epoch, std::size_t epochs);

/// Heavy-ball SGD: v <- mu v + g; theta <- theta - lr v. Buffers missing from
/// `velocity` start at zero. Every gradient must name an existing parameter
/// of the same shape.
void sgd_step(TensorMap& parameters, const TensorMap& gradients, double lr, double momentum, TensorMap& velocity);

/// k <- c k + (1 - c) q elementwise over the parameters both maps share by
/// position (key names are matched to query names in sorted order).
void momentum_update(TensorMap& key, const TensorMap& query, double coefficient);

/// FIFO of unit-norm key embeddings.
class KeyQueue {
 public:
  KeyQueue(std::size_t capacity, std::size_t dim);

  /// Fills the queue with random unit vectors.
  static KeyQueue random(std::size_t capacity, std::size_t dim, std::uint64_t seed);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return rows_.size(); }

  /// Appends each row of `keys` (oldest entries evicted beyond capacity).
  /// Rows must be unit-norm within 1e-9.
  void push(const Tensor& keys);
  /// Current contents, oldest first.
  Tensor contents() const;

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::deque<std::vector<double>> rows_;
};

struct MoCoState {
  TensorMap key_parameters;  // named like the query parameters, under "key."
  KeyQueue queue{1, 1};
  double momentum = 0.99;
  bool enqueue_all_views = false;
};

}  // namespace arcl::train
