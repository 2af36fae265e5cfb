#include "arcl/eval/sigma_delta.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "arcl/numcore/error.hpp"
#include "arcl/numcore/rng.hpp"

namespace arcl::eval {

double tau(double sigma, double delta, double lipschitz) {
  if (!(sigma > 0.0 && sigma <= 1.0)) throw InvalidArgument("sigma must lie in (0, 1]");
  if (!(delta >= 0.0)) throw InvalidArgument("delta must be non-negative");
  if (!(lipschitz > 0.0)) throw InvalidArgument("Lipschitz constant must be positive");
  return 4.0 * (1.0 - sigma * (1.0 - lipschitz * delta / 4.0));
}

nlohmann::json SigmaDelta::to_json() const {
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t k = 0; k < class_sigma.size(); ++k) {
    classes.push_back({{"class", k},
                       {"sigma", class_sigma[k]},
                       {"method", method[k]},
                       {"subset", subsets[k]},
                       {"size", distances[k].rows()}});
  }
  return {{"delta", delta}, {"sigma", sigma}, {"bound", "lower"}, {"classes", classes}};
}

double transformed_distance(const Tensor& copies_a, const Tensor& copies_b) {
  if (copies_a.cols() != copies_b.cols()) throw ShapeError("transformed copies differ in width");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < copies_a.rows(); ++i) {
    for (std::size_t j = 0; j < copies_b.rows(); ++j) {
      best = std::min(best, squared_distance(copies_a.row(i), copies_b.row(j)));
    }
  }
  return std::sqrt(best);
}

std::vector<std::size_t> max_clique_exhaustive(const std::vector<std::vector<bool>>& adjacency) {
  const std::size_t n = adjacency.size();
  if (n > 20) throw InvalidArgument("exhaustive clique search is limited to 20 vertices");
  std::vector<std::uint32_t> nbr(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && adjacency[i][j]) nbr[i] |= 1u << j;
    }
  }
  std::vector<std::size_t> best;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) < best.size()) continue;
    bool clique = true;
    for (std::size_t i = 0; i < n && clique; ++i) {
      if (mask & (1u << i)) clique = ((mask & ~(1u << i)) & ~nbr[i]) == 0;
    }
    if (!clique) continue;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) members.push_back(i);
    }
    if (members.size() > best.size() || (members.size() == best.size() && members < best)) best = std::move(members);
  }
  return best;
}

std::vector<std::size_t> greedy_clique(const std::vector<std::vector<bool>>& adjacency) {
  const std::size_t n = adjacency.size();
  if (n == 0) return {};
  std::vector<std::size_t> degree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) degree[i] += i != j && adjacency[i][j];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return degree[a] > degree[b]; });
  std::vector<std::size_t> clique{order[0]};
  for (std::size_t idx = 1; idx < n; ++idx) {
    const std::size_t v = order[idx];
    if (std::all_of(clique.begin(), clique.end(), [&](std::size_t u) { return adjacency[u][v]; })) clique.push_back(v);
  }
  std::sort(clique.begin(), clique.end());
  return clique;
}

SigmaDelta estimate_sigma_delta(const data::Dataset& dataset, const data::TransformationFamily& family, double delta,
                                std::size_t transformation_samples, std::uint64_t seed, std::size_t exhaustive_limit) {
  if (!dataset.labeled()) throw InvalidArgument("sigma estimation needs labels");
  if (!(delta >= 0.0)) throw InvalidArgument("delta must be non-negative");
  if (family.data_dim() != dataset.dim()) throw ShapeError("family and dataset dimensions differ");
  if (exhaustive_limit > 20) throw InvalidArgument("exhaustive limit cannot exceed 20");

  std::vector<data::Transformation> transforms;
  if (family.finite()) {
    transforms = family.grid_members();
  } else {
    if (transformation_samples < 1) throw InvalidArgument("need at least one sampled transformation");
    Rng rng(derive_seed(seed, "sigma-delta"));
    for (std::size_t t = 0; t < transformation_samples; ++t) {
      transforms.push_back(family.realize(family.sample_parameter(rng)));
    }
  }

  std::vector<Tensor> copies(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    Tensor c({transforms.size(), dataset.dim()});
    for (std::size_t t = 0; t < transforms.size(); ++t) transforms[t].apply(dataset.samples.row(i), c.row(t));
    copies[i] = std::move(c);
  }

  SigmaDelta sd;
  sd.delta = delta;
  sd.sigma = 1.0;
  const auto members = dataset.class_members();
  for (std::size_t k = 0; k < members.size(); ++k) {
    const auto& rows = members[k];
    if (rows.empty()) throw InvalidArgument("class " + std::to_string(k) + " has no samples");
    const std::size_t nk = rows.size();
    Tensor dist({nk, nk});
    std::vector<std::vector<bool>> adj(nk, std::vector<bool>(nk, true));
    for (std::size_t a = 0; a < nk; ++a) {
      for (std::size_t b = a + 1; b < nk; ++b) {
        const double d = transformed_distance(copies[rows[a]], copies[rows[b]]);
        dist.at(a, b) = dist.at(b, a) = d;
        adj[a][b] = adj[b][a] = d <= delta;
      }
    }
    const bool exact = nk <= exhaustive_limit;
    const auto clique = exact ? max_clique_exhaustive(adj) : greedy_clique(adj);
    std::vector<std::size_t> subset;
    for (std::size_t c : clique) subset.push_back(rows[c]);
    const double s = static_cast<double>(clique.size()) / static_cast<double>(nk);
    sd.class_sigma.push_back(s);
    sd.subsets.push_back(std::move(subset));
    sd.method.push_back(exact ? "exhaustive" : "greedy-clique");
    sd.distances.push_back(std::move(dist));
    sd.sigma = std::min(sd.sigma, s);
  }
  return sd;
}

}  // namespace arcl::eval
