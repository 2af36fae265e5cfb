#include "arcl/train/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "arcl/numcore/error.hpp"
#include "arcl/numcore/rng.hpp"

namespace arcl::train {

double learning_rate(LrSchedule schedule, double base, std::size_t epoch, std::size_t epochs) {
  if (schedule == LrSchedule::kConstant || epochs == 0) return base;
  const double t = static_cast<double>(epoch) / static_cast<double>(epochs);
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void sgd_step(TensorMap& parameters, const TensorMap& gradients, double lr, double momentum, TensorMap& velocity) {
  for (const auto& [name, g] : gradients) {
    auto it = parameters.find(name);
    if (it == parameters.end()) throw InvalidArgument("gradient for unknown parameter '" + name + "'");
    if (it->second.shape() != g.shape()) {
      throw ShapeError("gradient shape " + shape_to_string(g.shape()) + " does not match parameter '" + name + "' " +
                       shape_to_string(it->second.shape()));
    }
  }
  for (const auto& [name, g] : gradients) {
    Tensor& theta = parameters.at(name);
    auto [vit, inserted] = velocity.try_emplace(name, Tensor(g.shape()));
    Tensor& v = vit->second;
    if (v.shape() != g.shape()) throw ShapeError("momentum buffer for '" + name + "' has the wrong shape");
    for (std::size_t i = 0; i < g.size(); ++i) {
      v[i] = momentum * v[i] + g[i];
      theta[i] -= lr * v[i];
    }
  }
}

void momentum_update(TensorMap& key, const TensorMap& query, double coefficient) {
  if (!(coefficient >= 0.0 && coefficient < 1.0)) throw InvalidArgument("momentum coefficient must lie in [0, 1)");
  if (key.size() != query.size()) throw ShapeError("key and query parameter sets differ in size");
  auto q = query.begin();
  for (auto& [name, k] : key) {
    if (k.shape() != q->second.shape()) throw ShapeError("key parameter '" + name + "' shape mismatch");
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = coefficient * k[i] + (1.0 - coefficient) * q->second[i];
    ++q;
  }
}

KeyQueue::KeyQueue(std::size_t capacity, std::size_t dim) : capacity_(capacity), dim_(dim) {
  if (capacity == 0 || dim == 0) throw InvalidArgument("queue capacity and dimension must be positive");
}

KeyQueue KeyQueue::random(std::size_t capacity, std::size_t dim, std::uint64_t seed) {
  KeyQueue q(capacity, dim);
  Rng rng(seed);
  Tensor t({capacity, dim});
  for (double& v : t.data()) v = rng.normal();
  q.push(l2_normalize_rows(t));
  return q;
}

void KeyQueue::push(const Tensor& keys) {
  if (keys.size() == 0) return;
  if (keys.rank() != 2 || keys.cols() != dim_) throw ShapeError("queue keys must have width " + std::to_string(dim_));
  for (std::size_t r = 0; r < keys.rows(); ++r) {
    if (std::abs(norm(keys.row(r)) - 1.0) > 1e-9) throw InvalidArgument("queue keys must be unit-norm");
  }
  for (std::size_t r = 0; r < keys.rows(); ++r) {
    rows_.emplace_back(keys.row(r).begin(), keys.row(r).end());
    if (rows_.size() > capacity_) rows_.pop_front();
  }
}

Tensor KeyQueue::contents() const {
  Tensor t({rows_.size(), dim_});
  for (std::size_t r = 0; r < rows_.size(); ++r) std::copy(rows_[r].begin(), rows_[r].end(), t.row(r).begin());
  return t;
}

}  // namespace arcl::train
