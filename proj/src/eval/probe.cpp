#include "arcl/eval/probe.hpp"

#include <cmath>

#include "arcl/numcore/error.hpp"
#include "arcl/numcore/linalg.hpp"

namespace arcl::eval {

double LinearHead::norm() const { return linalg::spectral_norm(weight); }

Tensor LinearHead::scores(const Tensor& features) const {
  if (features.rank() != 2 || features.cols() != weight.cols()) {
    throw ShapeError("head expects features of width " + std::to_string(weight.cols()) + ", got " +
                     shape_to_string(features.shape()));
  }
  Tensor out = linalg::matmul_nt(features, weight);
  if (has_bias()) {
    for (std::size_t r = 0; r < out.rows(); ++r) {
      for (std::size_t k = 0; k < out.cols(); ++k) out.at(r, k) += bias[k];
    }
  }
  return out;
}

nlohmann::json LinearHead::to_json() const {
  nlohmann::json w = nlohmann::json::array();
  for (std::size_t k = 0; k < weight.rows(); ++k) {
    w.push_back(std::vector<double>(weight.row(k).begin(), weight.row(k).end()));
  }
  nlohmann::json j{{"weight", w}, {"norm", norm()}, {"trained_on", trained_on}};
  if (has_bias()) j["bias"] = bias.values();
  return j;
}

namespace {

void check_labels(const Tensor& features, const std::vector<std::size_t>& labels, std::size_t classes) {
  if (features.rank() != 2) throw ShapeError("features must be an n x p matrix");
  if (labels.size() != features.rows()) throw ShapeError("feature and label counts differ");
  for (std::size_t y : labels) {
    if (y >= classes) throw InvalidArgument("label " + std::to_string(y) + " outside [0, K)");
  }
}

}  // namespace

ProbeResult linear_probe_sq(const Tensor& features, const std::vector<std::size_t>& labels, std::size_t classes,
                            const ProbeOptions& options) {
  check_labels(features, labels, classes);
  const std::size_t n = features.rows();
  if (n < classes) throw InvalidArgument("probe needs at least K samples");
  if (!features.all_finite()) throw NumericalError("probe features are not finite");
  const std::size_t p = features.cols();
  const std::size_t q = p + (options.intercept ? 1 : 0);

  Tensor design({n, q});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < p; ++c) design.at(r, c) = features.at(r, c);
    if (options.intercept) design.at(r, p) = 1.0;
  }
  Tensor targets({n, classes});
  for (std::size_t r = 0; r < n; ++r) targets.at(r, labels[r]) = 1.0;

  const double inv_n = 1.0 / static_cast<double>(n);
  Tensor gram = linalg::matmul_tn(design, design);
  Tensor rhs = linalg::matmul_tn(design, targets);
  for (double& v : gram.data()) v *= inv_n;
  for (double& v : rhs.data()) v *= inv_n;

  ProbeResult result;
  double trace = 0.0;
  for (std::size_t c = 0; c < q; ++c) trace += gram.at(c, c);
  Tensor solution;
  // Singular when the smallest eigenvalue is negligible against the scale.
  const auto eig = linalg::symmetric_eigenvalues(gram);
  result.degenerate = !(eig.back() > 1e-12 * std::max(trace, 1e-300));
  result.ridge = options.ridge_scale * trace / static_cast<double>(q);
  if (!(result.ridge > 0.0)) result.ridge = options.ridge_scale;
  Tensor reg = gram;
  for (std::size_t c = 0; c < q; ++c) reg.at(c, c) += result.ridge;
  if (!linalg::cholesky_solve(reg, rhs, solution)) throw NumericalError("probe normal equations could not be solved");

  LinearHead head;
  head.weight = Tensor({classes, p});
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t c = 0; c < p; ++c) head.weight.at(k, c) = solution.at(c, k);
  }
  if (options.intercept) {
    head.bias = Tensor({classes});
    for (std::size_t k = 0; k < classes; ++k) head.bias[k] = solution.at(p, k);
  }
  result.head = std::move(head);
  result.risk = square_risk(result.head, features, labels);
  return result;
}

ProbeResult linear_probe_sq(const losses::FeatureMap& f, const data::Dataset& dataset, const ProbeOptions& options) {
  if (!dataset.labeled()) throw InvalidArgument("probe needs a labeled dataset");
  return linear_probe_sq(f(dataset.samples), *dataset.labels, dataset.class_count, options);
}

double square_risk(const LinearHead& head, const Tensor& features, const std::vector<std::size_t>& labels) {
  check_labels(features, labels, head.classes());
  const Tensor s = head.scores(features);
  double total = 0.0;
  for (std::size_t r = 0; r < s.rows(); ++r) {
    for (std::size_t k = 0; k < s.cols(); ++k) {
      const double e = s.at(r, k) - (labels[r] == k ? 1.0 : 0.0);
      total += e * e;
    }
  }
  return s.rows() ? total / static_cast<double>(s.rows()) : 0.0;
}

double risk_01(const LinearHead& head, const Tensor& features, const std::vector<std::size_t>& labels) {
  check_labels(features, labels, head.classes());
  const Tensor s = head.scores(features);
  std::size_t wrong = 0;
  for (std::size_t r = 0; r < s.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < s.cols(); ++k) {
      if (s.at(r, k) > s.at(r, best)) best = k;
    }
    wrong += best != labels[r];
  }
  return s.rows() ? static_cast<double>(wrong) / static_cast<double>(s.rows()) : 0.0;
}

double risk_01(const Tensor& scores, double threshold, const std::vector<std::size_t>& labels) {
  if (scores.size() != labels.size() || (scores.rank() == 2 && scores.cols() != 1)) {
    throw ShapeError("threshold rule expects one score per sample");
  }
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw InvalidArgument("threshold rule is binary");
    wrong += (scores[i] >= threshold ? 1u : 0u) != labels[i];
  }
  return labels.empty() ? 0.0 : static_cast<double>(wrong) / static_cast<double>(labels.size());
}

}  // namespace arcl::eval
