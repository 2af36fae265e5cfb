#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "arcl/data/dataset.hpp"
#include "arcl/losses/alignment.hpp"
#include "arcl/numcore/tensor.hpp"

namespace arcl::eval {

/// Linear head h (K x p) with an optional intercept.
struct LinearHead {
  Tensor weight;
  Tensor bias;  // length K, or empty
  std::string trained_on;

  std::size_t classes() const { return weight.rows(); }
  bool has_bias() const { return bias.rank() == 1 && bias.size() > 0; }
  /// Spectral norm of the weight (the intercept is not included).
  double norm() const;
  /// n x K scores h f + b.
  Tensor scores(const Tensor& features) const;
  nlohmann::json to_json() const;
};

struct ProbeOptions {
  bool intercept = false;
  /// Ridge = ridge_scale * trace(F^T F / n) / p.
  double ridge_scale = 1e-8;
};

struct ProbeResult {
  LinearHead head;
  double risk = 0.0;  // mean squared residual against one-hot targets
  double ridge = 0.0;
  /// The unregularized normal equations were singular (the ridge was needed).
  bool degenerate = false;
};

/// Least-squares head for one-hot targets on precomputed features.
ProbeResult linear_probe_sq(const Tensor& features, const std::vector<std::size_t>& labels, std::size_t classes,
                            const ProbeOptions& options = {});
ProbeResult linear_probe_sq(const losses::FeatureMap& f, const data::Dataset& dataset, const ProbeOptions& options = {});

/// Mean of ||h f(x) + b - e_y||^2.
double square_risk(const LinearHead& head, const Tensor& features, const std::vector<std::size_t>& labels);
/// Misclassification rate of argmax(h f + b) (lowest index wins ties).
double risk_01(const LinearHead& head, const Tensor& features, const std::vector<std::size_t>& labels);
/// Binary rule: predict 1 iff score >= threshold, for an n x 1 (or length-n) score.
double risk_01(const Tensor& scores, double threshold, const std::vector<std::size_t>& labels);

}  // namespace arcl::eval
