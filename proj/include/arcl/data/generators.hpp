#pragma once

#include <cstdint>

#include "arcl/data/dataset.hpp"
#include "json.hpp"

namespace arcl::data {

/// X ~ N(0, I_2), label 1(x_1 >= 0).
Dataset make_toy_axis_dataset(std::size_t n, std::uint64_t seed);

/// K Gaussian components with means separation * e_k (standard basis
/// directions, so d >= K) and isotropic spread cluster_std. Labels are
/// assigned round-robin, so every class gets floor(n/K) or ceil(n/K) samples.
Dataset make_gaussian_mixture(std::size_t classes, std::size_t dim, double separation, double cluster_std,
                              std::size_t n, std::uint64_t seed);

/// Binary task whose samples concatenate a "shortcut" block and a "core"
/// block. Each block is a two-component Gaussian along its first axis with
/// unit isotropic noise. The core block always follows the label; the
/// shortcut block follows the label with probability `corr` and an
/// independent fair coin otherwise, so a shortcut-only classifier errs with
/// probability (1 - corr) / 2 plus noise overlap.
struct ShortcutSpec {
  std::size_t shortcut_dim = 2;
  std::size_t core_dim = 2;
  double shortcut_separation = 4.0;  // distance of each component mean from 0
  double core_separation = 1.0;
  double noise_std = 1.0;
};

Dataset make_concat_shortcut_dataset(std::size_t n, double corr, std::uint64_t seed, const ShortcutSpec& spec = {});

/// Builds a dataset from a generator description:
///   {"generator": "toy" | "mixture" | "shortcut", "n": ..., ...}
Dataset generate(const nlohmann::json& spec, std::uint64_t seed);

}  // namespace arcl::data
