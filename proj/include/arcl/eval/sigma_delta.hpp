#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "arcl/data/dataset.hpp"
#include "arcl/data/family.hpp"
#include "arcl/numcore/tensor.hpp"

namespace arcl::eval {

/// Concentration penalty 4 (1 - sigma (1 - L delta / 4)).
double tau(double sigma, double delta, double lipschitz);

/// Estimated concentration of a finite (or sampled) family on a dataset.
/// sigma_hat is a lower bound on the true sigma for this delta: the
/// reported subsets always have d_A diameter <= delta.
struct SigmaDelta {
  double delta = 0.0;
  double sigma = 0.0;                          // min over classes
  std::vector<double> class_sigma;
  std::vector<std::vector<std::size_t>> subsets;  // dataset row indices per class
  std::vector<std::string> method;             // "exhaustive" or "greedy-clique" per class
  std::vector<Tensor> distances;               // per class, |C_k| x |C_k| estimated d_A

  nlohmann::json to_json() const;
};

/// min over transformation pairs of ||A1 x1 - A2 x2||, given the transformed
/// copies of each point (one row per transformation).
double transformed_distance(const Tensor& copies_a, const Tensor& copies_b);

/// Largest clique of a symmetric 0/1 adjacency matrix by enumeration
/// (n <= 20); ties resolve to the lexicographically smallest index set.
std::vector<std::size_t> max_clique_exhaustive(const std::vector<std::vector<bool>>& adjacency);

/// Grows a clique from the highest-degree vertex, adding vertices in order
/// of decreasing degree whenever they stay adjacent to every member.
std::vector<std::size_t> greedy_clique(const std::vector<std::vector<bool>>& adjacency);

/// Uses the family's grid when finite, otherwise `transformation_samples`
/// draws from pi (seeded). Classes with at most `exhaustive_limit` points are
/// solved exactly.
SigmaDelta estimate_sigma_delta(const data::Dataset& dataset, const data::TransformationFamily& family, double delta,
                                std::size_t transformation_samples = 16, std::uint64_t seed = 0,
                                std::size_t exhaustive_limit = 12);

}  // namespace arcl::eval
