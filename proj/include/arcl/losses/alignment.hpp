#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "arcl/data/dataset.hpp"
#include "arcl/data/family.hpp"
#include "arcl/numcore/tensor.hpp"

namespace arcl::losses {

/// Maps an n x d batch of samples to n x p features.
using FeatureMap = std::function<Tensor(const Tensor&)>;

/// Monte-Carlo estimate with its standard error.
struct McEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t draws = 0;
};

McEstimate summarize(const std::vector<double>& values);

/// E ||f(A1 x) - f(A2 x)||^2 with (A1, A2) ~ pi^2, estimated from
/// `pair_draws` independent pairs per sample.
McEstimate alignment_loss(const FeatureMap& f, const data::Dataset& dataset, const data::TransformationFamily& family,
                          std::size_t pair_draws, std::uint64_t seed);

/// The same expectation taken exactly under the uniform distribution over a
/// finite grid (all ordered pairs, including A1 = A2).
double alignment_loss_grid(const FeatureMap& f, const data::Dataset& dataset, const data::TransformationFamily& family);

/// Per-sample sup over grid pairs of ||f(A x) - f(A' x)||^2.
std::vector<double> ar_per_sample_exact(const FeatureMap& f, const data::Dataset& dataset,
                                        const data::TransformationFamily& family);

/// L_AR on a finite family: per-sample maximum over all grid pairs, then the
/// dataset mean.
double ar_loss_exact(const FeatureMap& f, const data::Dataset& dataset, const data::TransformationFamily& family);

/// Per-sample maxima over m sampled views. Sample i draws its views from a
/// stream seeded by (seed, i), so for a fixed seed the views for m are a
/// prefix of the views for any m' > m.
std::vector<double> ar_per_sample_empirical(const FeatureMap& f, const data::Dataset& dataset,
                                            const data::TransformationFamily& family, std::size_t m,
                                            std::uint64_t seed, data::SamplingMode mode = data::SamplingMode::kIid);

/// Empirical L_AR: mean over samples of the per-sample maxima.
double ar_loss_empirical(const FeatureMap& f, const data::Dataset& dataset, const data::TransformationFamily& family,
                         std::size_t m, std::uint64_t seed, data::SamplingMode mode = data::SamplingMode::kIid);

/// Maximum pairwise squared distance among the rows [first, first + count).
double max_pairwise_squared_distance(const Tensor& rows, std::size_t first, std::size_t count);

}  // namespace arcl::losses
