#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "arcl/data/dataset.hpp"
#include "arcl/data/family.hpp"
#include "arcl/eval/probe.hpp"
#include "arcl/eval/sigma_delta.hpp"
#include "arcl/losses/alignment.hpp"

namespace arcl::eval {

struct BoundTerm {
  std::string name;
  double value = 0.0;
};

/// Left-hand side against itemized right-hand terms. `pass` is set only when
/// the constant in the bound is known; otherwise `fitted_constant` reports
/// the smallest constant that would make the bound hold on this instance.
struct BoundReport {
  std::string bound;
  double lhs = 0.0;
  double rhs = 0.0;
  std::vector<BoundTerm> terms;
  double margin = 0.0;  // rhs - lhs
  std::optional<bool> pass;
  std::optional<double> fitted_constant;
  nlohmann::json details = nlohmann::json::object();

  double term(const std::string& name) const;
  nlohmann::json to_json() const;
  /// Long-format CSV: bound,quantity,value.
  void write_csv(std::ostream& out) const;
};

// ---------------------------------------------------------------------------
// Closed-form counterexample: f(x) = x1 + (sqrt(eps)/2) x2 on the toy axis
// data, augmentations multiplying x2 by theta ~ N(0, 1).

/// 0-1 risk of sign(f) on the domain where x2 is scaled by c.
double toy_risk(double epsilon, double c);

struct ToyReport {
  double epsilon = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double scale = 0.0;  // 2 / sqrt(eps)
  double analytic_alignment = 0.0;
  double analytic_risk_identity = 0.0;
  double analytic_risk_scaled = 0.0;
  losses::McEstimate empirical_alignment;
  double empirical_risk_identity = 0.0;
  double empirical_risk_scaled = 0.0;

  nlohmann::json to_json() const;
};

ToyReport toy_counterexample(double epsilon, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Per-domain probes and transfer.

struct DomainRiskReport {
  std::vector<std::string> domains;
  std::vector<double> risk;      // own-probe square risk per domain
  std::vector<double> error_01;  // own-probe 0-1 error per domain
  std::vector<double> head_norm;
  /// transfer[a][b]: square risk of the head fitted on a, evaluated on b.
  std::vector<std::vector<double>> transfer;
  std::vector<std::vector<double>> transfer_01;
  /// One head fitted on all domains pooled.
  std::vector<double> shared_risk;
  std::vector<double> shared_error_01;
  double shared_gap = 0.0;     // max_{a,b} |shared_risk[a] - shared_risk[b]|
  double shared_gap_01 = 0.0;
  double transfer_gap = 0.0;   // max_{a,b} |transfer[a][b] - transfer[b][b]|
  double transfer_gap_01 = 0.0;

  nlohmann::json to_json() const;
  /// Long format: head,domain,square_risk,error_01 (head "shared" for the pooled head).
  void write_csv(std::ostream& out) const;
};

DomainRiskReport domain_risk_report(const losses::FeatureMap& f, const data::Dataset& dataset,
                                    const std::vector<data::Transformation>& domains,
                                    const ProbeOptions& options = {});

// ---------------------------------------------------------------------------
// Worst-case risk gap of a fixed head across the domains of a finite family:
// max_{A,A'} |R(h f; D_A) - R(h f; D_A')| <= ||h|| (2||h|| + 2) sqrt(L_AR),
// for unit-norm f and square loss against one-hot targets.

BoundReport risk_gap_check(const losses::FeatureMap& f, const LinearHead& head, const data::Dataset& dataset,
                           const data::TransformationFamily& family);

// ---------------------------------------------------------------------------
// Augmented-distribution diagnostics.

struct AugmentedSample {
  Tensor features;
  std::vector<std::size_t> labels;
};

/// `repetitions` fresh draws A ~ pi per sample, features f(A x).
AugmentedSample augmented_features(const losses::FeatureMap& f, const data::Dataset& dataset,
                                   const data::TransformationFamily& family, std::size_t repetitions,
                                   std::uint64_t seed);

/// K x p matrix of class means, and class frequencies.
Tensor class_centers(const AugmentedSample& sample, std::size_t classes, std::vector<double>* weights = nullptr);

struct AugmentedOptions {
  std::size_t repetitions = 16;
  std::size_t alignment_pair_draws = 4;
  std::uint64_t seed = 0;
  /// Lipschitz constant of f entering the concentration penalty.
  double lipschitz = 1.0;
};

/// Risk of h on the augmented distribution against the alignment, concentration
/// and class-center terms. Diagnostic only: the alignment constant is fitted.
BoundReport augmented_risk_report(const losses::FeatureMap& f, const LinearHead& head, const data::Dataset& dataset,
                                  const data::TransformationFamily& family, const SigmaDelta& sd,
                                  const AugmentedOptions& options = {});

/// Class-center geometry and the margin 1 - c1 L_align^(1/4) - tau - c2 max|mu_k^T mu_k'|.
BoundReport center_margin_diagnostics(const losses::FeatureMap& f, const data::Dataset& dataset,
                                      const data::TransformationFamily& family, const SigmaDelta& sd, double c1,
                                      double c2, const AugmentedOptions& options = {});

// ---------------------------------------------------------------------------
// Finite-view approximation of the worst case.

struct ViewScalingRow {
  std::size_t m = 0;
  std::size_t effective_m = 0;
  double mean_gap = 0.0;
  double max_gap = 0.0;
  double min_gap = 0.0;
};

struct ViewScalingTable {
  double exact = 0.0;
  std::size_t repeats = 0;
  std::uint64_t seed = 0;
  std::vector<ViewScalingRow> rows;
  /// Every repeat's gap sequence is non-increasing in m.
  bool monotone = true;
  /// Least-squares slope of log(mean gap) on log(m) over rows with a positive gap.
  std::optional<double> loglog_slope;
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

/// Gap L_AR^exact - L_AR-hat(m) for each m, repeated with seeds derived
/// from `seed`; within a repeat the views for smaller m are a prefix of
/// those for larger m.
ViewScalingTable view_scaling_study(const losses::FeatureMap& f, const data::Dataset& dataset,
                                    const data::TransformationFamily& family, const std::vector<std::size_t>& m_list,
                                    std::size_t repeats, std::uint64_t seed,
                                    data::SamplingMode mode = data::SamplingMode::kIid);

}  // namespace arcl::eval
