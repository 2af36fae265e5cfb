#include "arcl/losses/alignment.hpp"

#include <algorithm>
#include <cmath>

#include "arcl/numcore/error.hpp"
#include "arcl/numcore/rng.hpp"

namespace arcl::losses {

McEstimate summarize(const std::vector<double>& values) {
  McEstimate est;
  est.draws = values.size();
  if (values.empty()) return est;
  double s = 0.0;
  for (double v : values) s += v;
  est.mean = s / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - est.mean) * (v - est.mean);
    est.standard_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return est;
}

namespace {

void require_samples(const data::Dataset& ds) {
  if (ds.samples.rank() != 2 || ds.size() == 0) throw InvalidArgument("dataset must not be empty");
}

Tensor features_checked(const FeatureMap& f, const Tensor& rows) {
  Tensor out = f(rows);
  if (out.rows() != rows.rows()) throw ShapeError("feature map changed the row count");
  return out;
}

/// Stacks t_j(x_i) for every sample i and transformation j (row i*G + j).
Tensor stack_views(const data::Dataset& ds, const std::vector<data::Transformation>& ts) {
  const std::size_t n = ds.size(), g = ts.size(), d = ds.dim();
  Tensor rows({n * g, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < g; ++j) ts[j].apply(ds.samples.row(i), rows.row(i * g + j));
  }
  return rows;
}

}  // namespace

double max_pairwise_squared_distance(const Tensor& rows, std::size_t first, std::size_t count) {
  double best = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    for (std::size_t k = j + 1; k < count; ++k) {
      best = std::max(best, squared_distance(rows.row(first + j), rows.row(first + k)));
    }
  }
  return best;
}

McEstimate alignment_loss(const FeatureMap& f, const data::Dataset& dataset, const data::TransformationFamily& family,
                          std::size_t pair_draws, std::uint64_t seed) {
  require_samples(dataset);
  if (pair_draws < 1) throw InvalidArgument("alignment_loss needs pair_draws >= 1");
  Rng rng(seed);
  const std::size_t n = dataset.size(), d = dataset.dim();
  Tensor rows({2 * n * pair_draws, d});
  std::size_t r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < pair_draws; ++k) {
      family.realize(family.sample_parameter(rng)).apply(dataset.samples.row(i), rows.row(r++));
      family.realize(family.sample_parameter(rng)).apply(dataset.samples.row(i), rows.row(r++));
    }
  }
  const Tensor z = features_checked(f, rows);
  std::vector<double> terms(n * pair_draws);
  for (std::size_t t = 0; t < terms.size(); ++t) terms[t] = squared_distance(z.row(2 * t), z.row(2 * t + 1));
  return summarize(terms);
}

double alignment_loss_grid(const FeatureMap& f, const data::Dataset& dataset, const data::TransformationFamily& family) {
  require_samples(dataset);
  const auto ts = family.grid_members();
  const std::size_t n = dataset.size(), g = ts.size();
  const Tensor z = features_checked(f, stack_views(dataset, ts));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < g; ++j) {
      for (std::size_t k = 0; k < g; ++k) s += squared_distance(z.row(i * g + j), z.row(i * g + k));
    }
    total += s / static_cast<double>(g * g);
  }
  return total / static_cast<double>(n);
}

std::vector<double> ar_per_sample_exact(const FeatureMap& f, const data::Dataset& dataset,
                                        const data::TransformationFamily& family) {
  require_samples(dataset);
  if (!family.finite()) throw InvalidArgument("exact L_AR requires a finite grid");
  const auto ts = family.grid_members();
  if (ts.size() < 2) throw InvalidArgument("exact L_AR requires a grid with at least two members");
  const std::size_t n = dataset.size(), g = ts.size();
  const Tensor z = features_checked(f, stack_views(dataset, ts));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = max_pairwise_squared_distance(z, i * g, g);
  return out;
}

double ar_loss_exact(const FeatureMap& f, const data::Dataset& dataset, const data::TransformationFamily& family) {
  const auto per = ar_per_sample_exact(f, dataset, family);
  double s = 0.0;
  for (double v : per) s += v;
  return s / static_cast<double>(per.size());
}

std::vector<double> ar_per_sample_empirical(const FeatureMap& f, const data::Dataset& dataset,
                                            const data::TransformationFamily& family, std::size_t m,
                                            std::uint64_t seed, data::SamplingMode mode) {
  require_samples(dataset);
  if (m < 2) throw InvalidArgument("empirical L_AR needs m >= 2");
  const std::size_t n = dataset.size(), d = dataset.dim();
  std::vector<std::size_t> counts(n);
  std::vector<std::vector<double>> staged;
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, i));
    const auto ts = data::sample_transformations(family, m, rng, mode);
    counts[i] = ts.size();
    for (const auto& t : ts) staged.push_back(t.apply(dataset.samples.row(i)));
    total += ts.size();
  }
  Tensor rows({total, d});
  for (std::size_t r = 0; r < total; ++r) std::copy(staged[r].begin(), staged[r].end(), rows.row(r).begin());
  const Tensor z = features_checked(f, rows);
  std::vector<double> out(n);
  std::size_t first = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = max_pairwise_squared_distance(z, first, counts[i]);
    first += counts[i];
  }
  return out;
}

double ar_loss_empirical(const FeatureMap& f, const data::Dataset& dataset, const data::TransformationFamily& family,
                         std::size_t m, std::uint64_t seed, data::SamplingMode mode) {
  const auto per = ar_per_sample_empirical(f, dataset, family, m, seed, mode);
  double s = 0.0;
  for (double v : per) s += v;
  return s / static_cast<double>(per.size());
}

}  // namespace arcl::losses
