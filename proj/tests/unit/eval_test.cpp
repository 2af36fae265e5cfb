#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "arcl/data/generators.hpp"
#include "arcl/data/transform.hpp"
#include "arcl/eval/bounds.hpp"
#include "arcl/eval/probe.hpp"
#include "arcl/eval/sigma_delta.hpp"
#include "arcl/numcore/error.hpp"
#include "arcl/numcore/linalg.hpp"
#include "arcl/numcore/rng.hpp"
#include "arcl/train/trainer.hpp"

using namespace arcl;
using namespace arcl::eval;
using data::ParameterDomain;
using data::Transformation;
using data::TransformationFamily;

namespace {

losses::FeatureMap random_encoder(std::size_t d, std::size_t p, std::uint64_t seed) {
  auto net = train::Network::initialize({train::Architecture::kMlp2, d, 8, p, train::Activation::kTanh, true},
                                        "encoder", seed);
  return [net](const Tensor& x) { return net.forward(x); };
}

/// Independent maximum-clique oracle (Bron–Kerbosch with pivoting).
void bron_kerbosch(const std::vector<std::vector<bool>>& adj, std::set<std::size_t> r, std::set<std::size_t> p,
                   std::set<std::size_t> x, std::size_t& best) {
  if (p.empty() && x.empty()) {
    best = std::max(best, r.size());
    return;
  }
  std::size_t pivot = p.empty() ? *x.begin() : *p.begin();
  std::vector<std::size_t> candidates;
  for (std::size_t v : p) {
    if (!adj[pivot][v] || v == pivot) candidates.push_back(v);
  }
  for (std::size_t v : candidates) {
    std::set<std::size_t> r2 = r, p2, x2;
    r2.insert(v);
    for (std::size_t u : p) {
      if (u != v && adj[v][u]) p2.insert(u);
    }
    for (std::size_t u : x) {
      if (u != v && adj[v][u]) x2.insert(u);
    }
    bron_kerbosch(adj, r2, p2, x2, best);
    p.erase(v);
    x.insert(v);
  }
}

std::size_t clique_number(const std::vector<std::vector<bool>>& adj) {
  std::set<std::size_t> all;
  for (std::size_t i = 0; i < adj.size(); ++i) all.insert(i);
  std::size_t best = 0;
  bron_kerbosch(adj, {}, all, {}, best);
  return best;
}

data::Dataset labeled_points(const std::vector<std::vector<double>>& rows, std::vector<std::size_t> labels,
                             std::size_t classes) {
  data::Dataset ds;
  ds.samples = Tensor({rows.size(), rows[0].size()});
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), ds.samples.row(i).begin());
  ds.labels = std::move(labels);
  ds.class_count = classes;
  return ds;
}

}  // namespace

// ---------------------------------------------------------------------------
// Probe

TEST(Probe, OneHotFeaturesGiveIdentity) {
  std::vector<std::size_t> labels;
  Tensor f({30, 3});
  for (std::size_t i = 0; i < 30; ++i) {
    labels.push_back(i % 3);
    f.at(i, i % 3) = 1.0;
  }
  auto r = linear_probe_sq(f, labels, 3);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) EXPECT_NEAR(r.head.weight.at(a, b), a == b ? 1.0 : 0.0, 1e-6);
  }
  EXPECT_LT(r.risk, 1e-12);
  EXPECT_FALSE(r.degenerate);
}

TEST(Probe, IndependentLabelsGiveTargetVariance) {
  Rng rng(1);
  const std::size_t n = 20000, k = 3;
  Tensor f({n, 2});
  std::vector<std::size_t> labels;
  std::vector<double> freq(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    f.at(i, 0) = rng.normal();
    f.at(i, 1) = rng.normal();
    labels.push_back(rng.below(k));
    freq[labels.back()] += 1.0 / n;
  }
  double variance = 1.0;
  for (double q : freq) variance -= q * q;
  auto r = linear_probe_sq(f, labels, k, {.intercept = true});
  EXPECT_NEAR(r.risk, variance, 2e-3);
}

TEST(Probe, StationaryPoint) {
  // First-order optimality: F^T (F H - Y) / n is the ridge term only.
  Rng rng(2);
  const std::size_t n = 200, p = 4, k = 3;
  Tensor f({n, p});
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < p; ++c) f.at(i, c) = rng.normal() + (c == i % k ? 1.5 : 0.0);
    labels.push_back(i % k);
  }
  auto r = linear_probe_sq(f, labels, k);
  Tensor res = linalg::matmul_nt(f, r.head.weight);
  for (std::size_t i = 0; i < n; ++i) res.at(i, labels[i]) -= 1.0;
  Tensor grad = linalg::matmul_tn(f, res);
  for (std::size_t c = 0; c < p; ++c) {
    for (std::size_t j = 0; j < k; ++j) {
      EXPECT_NEAR(grad.at(c, j) / n, -r.ridge * r.head.weight.at(j, c), 1e-10);
    }
  }
}

TEST(Probe, NoRandomHeadDoesBetter) {
  Rng rng(3);
  auto ds = data::make_gaussian_mixture(3, 4, 1.5, 1.0, 300, 3);
  auto r = linear_probe_sq(ds.samples, *ds.labels, 3);
  const double bias = r.ridge * std::pow(linalg::frobenius_norm(r.head.weight), 2);
  for (int t = 0; t < 100; ++t) {
    LinearHead h;
    h.weight = Tensor({3, 4});
    for (std::size_t i = 0; i < h.weight.size(); ++i) h.weight[i] = r.head.weight[i] + 0.3 * rng.normal();
    EXPECT_LE(r.risk, square_risk(h, ds.samples, *ds.labels) + bias);
  }
}

TEST(Probe, DegenerateFeaturesAreSignaled) {
  Rng rng(4);
  Tensor f({50, 2});
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < 50; ++i) {
    f.at(i, 0) = f.at(i, 1) = rng.normal();
    labels.push_back(i % 2);
  }
  auto r = linear_probe_sq(f, labels, 2);
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(r.head.weight.all_finite());
  EXPECT_THROW(linear_probe_sq(Tensor({1, 2}), {0}, 2), InvalidArgument);
}

TEST(Risk01, Examples) {
  std::vector<std::size_t> labels;
  Tensor scores({1000, 1});
  for (std::size_t i = 0; i < 1000; ++i) {
    labels.push_back(i % 2);
    scores[i] = i % 2 ? 1.0 : -1.0;
  }
  EXPECT_EQ(risk_01(scores, 0.0, labels), 0.0);
  EXPECT_EQ(risk_01(Tensor({1000, 1}), 0.5, labels), 0.5);
  LinearHead constant;
  constant.weight = Tensor({2, 1});
  constant.bias = Tensor::vector({1.0, 0.0});
  EXPECT_EQ(risk_01(constant, scores, labels), 0.5);
}

// ---------------------------------------------------------------------------
// Closed-form counterexample

TEST(Toy, AnalyticValues) {
  for (double eps : {0.01, 0.04, 0.5}) {
    EXPECT_EQ(toy_risk(eps, 0.0), 0.0);
    EXPECT_NEAR(toy_risk(eps, 2.0 / std::sqrt(eps)), 0.25, 1e-15);
  }
}

TEST(Toy, ArccosFormulaMatchesOrthantProbability) {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> z;
  for (double b : {0.3, 1.0, 2.5}) {
    const int n = 400000;
    int wrong = 0;
    for (int i = 0; i < n; ++i) {
      const double x1 = z(gen), x2 = z(gen);
      wrong += (x1 >= 0) != (x1 + b * x2 >= 0);
    }
    // b = (sqrt(eps)/2) c with eps = 4 makes c = b
    EXPECT_NEAR(toy_risk(4.0, b), static_cast<double>(wrong) / n, 0.003);
  }
}

TEST(Toy, EmpiricalMatchesAnalytic) {
  auto r = toy_counterexample(0.04, 100000, 7);
  EXPECT_DOUBLE_EQ(r.analytic_alignment, 0.02);
  EXPECT_EQ(r.analytic_risk_identity, 0.0);
  EXPECT_NEAR(r.analytic_risk_scaled, 0.25, 1e-15);
  EXPECT_LE(std::abs(r.empirical_alignment.mean - 0.02), 3 * r.empirical_alignment.standard_error);
  EXPECT_NEAR(r.empirical_risk_identity, 0.0, 0.01);
  EXPECT_NEAR(r.empirical_risk_scaled, 0.25, 0.01);
  const auto j = r.to_json();
  EXPECT_EQ(j["analytic"]["align"], 0.02);
  EXPECT_THROW(toy_counterexample(0.0, 10, 1), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Domain reports

TEST(DomainReport, IdenticalDomainsHaveNoGap) {
  auto ds = data::make_gaussian_mixture(2, 3, 2.0, 1.0, 200, 1);
  auto f = random_encoder(3, 2, 1);
  auto id = Transformation::axis_scale({1, 1, 1});
  auto r = domain_risk_report(f, ds, {id, id, id});
  EXPECT_EQ(r.shared_gap, 0.0);
  EXPECT_EQ(r.transfer_gap, 0.0);
  for (std::size_t a = 0; a < 3; ++a) EXPECT_EQ(r.transfer[a][a], r.risk[a]);
}

TEST(DomainReport, InvariantFeaturesGiveIdenticalRows) {
  auto ds = data::make_gaussian_mixture(2, 3, 2.0, 1.0, 200, 2);
  losses::FeatureMap f = [](const Tensor& x) {
    Tensor out({x.rows(), 2});
    for (std::size_t i = 0; i < x.rows(); ++i) {
      out.at(i, 0) = std::tanh(x.at(i, 0));
      out.at(i, 1) = std::tanh(x.at(i, 1));
    }
    return out;
  };
  auto r = domain_risk_report(f, ds, {Transformation::shift({0, 0, 0}), Transformation::shift({0, 0, 3}),
                                      Transformation::axis_scale({1, 1, -2})});
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) EXPECT_NEAR(r.transfer[a][b], r.transfer[0][0], 1e-10);
  }
  std::ostringstream csv;
  r.write_csv(csv);
  const std::string text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 9 + 3);
}

TEST(DomainReport, ToyEncoderZeroOneGap) {
  const double eps = 0.04;
  auto ds = data::make_toy_axis_dataset(100000, 5);
  losses::FeatureMap f = [eps](const Tensor& x) {
    Tensor out({x.rows(), 1});
    for (std::size_t i = 0; i < x.rows(); ++i) out.at(i, 0) = x.at(i, 0) + std::sqrt(eps) / 2.0 * x.at(i, 1);
    return out;
  };
  auto r = domain_risk_report(
      f, ds, {Transformation::axis_scale({1.0, 0.0}), Transformation::axis_scale({1.0, 2.0 / std::sqrt(eps)})});
  EXPECT_NEAR(r.shared_gap_01, 0.25, 0.01);
  ASSERT_EQ(r.transfer.size(), 2u);
}

// ---------------------------------------------------------------------------
// Worst-case risk gap

TEST(RiskGap, InvariantEncoderPasses) {
  auto ds = data::make_gaussian_mixture(2, 3, 2.0, 1.0, 100, 3);
  auto enc = random_encoder(2, 2, 3);
  losses::FeatureMap f = [enc](const Tensor& x) {
    Tensor head({x.rows(), 2});
    for (std::size_t i = 0; i < x.rows(); ++i) {
      head.at(i, 0) = x.at(i, 0);
      head.at(i, 1) = x.at(i, 1);
    }
    return enc(head);
  };
  auto fam = TransformationFamily::shift(3, {2}, ParameterDomain::box({-2}, {2}), {}).with_grid({{-2}, {0}, {1.5}});
  LinearHead h;
  h.weight = Tensor::matrix({{1.0, -0.5}, {0.2, 0.7}});
  auto r = risk_gap_check(f, h, ds, fam);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_TRUE(*r.pass);
  LinearHead zero;
  zero.weight = Tensor({2, 2});
  auto z = risk_gap_check(random_encoder(3, 2, 4), zero, ds, fam.with_grid({{-2}, {2}}));
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_EQ(z.rhs, 0.0);
  EXPECT_TRUE(*z.pass);
}

TEST(RiskGap, NoViolationsOnRandomInstances) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 4, k = 2 + rng.below(2), p = 2 + rng.below(3);
    auto ds = data::make_gaussian_mixture(k, d, rng.uniform(0, 3), 1.0, 60, rng.next_u64());
    auto f = random_encoder(d, p, rng.next_u64());
    std::vector<data::Parameter> grid;
    for (int g = 0; g < 3; ++g) grid.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2)});
    auto fam = TransformationFamily::shift(d, {0, 3}, ParameterDomain::box({-2, -2}, {2, 2}), {}).with_grid(grid);
    LinearHead h;
    h.weight = Tensor({k, p});
    for (double& v : h.weight.data()) v = rng.normal();
    const double scale = rng.uniform(0, 3) / h.norm();
    for (double& v : h.weight.data()) v *= scale;
    auto r = risk_gap_check(f, h, ds, fam);
    ASSERT_TRUE(*r.pass) << "trial " << trial << " lhs " << r.lhs << " rhs " << r.rhs;
    // brute-force recomputation of the left-hand side
    std::vector<double> risks;
    for (const auto& t : fam.grid_members()) {
      const Tensor z = f(t.apply_rows(ds.samples));
      double s = 0.0;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t c = 0; c < k; ++c) {
          double v = -(ds.label(i) == c ? 1.0 : 0.0);
          for (std::size_t j = 0; j < p; ++j) v += h.weight.at(c, j) * z.at(i, j);
          s += v * v;
        }
      }
      risks.push_back(s / ds.size());
    }
    EXPECT_NEAR(r.lhs, *std::max_element(risks.begin(), risks.end()) - *std::min_element(risks.begin(), risks.end()),
                1e-12);
  }
}

TEST(RiskGap, RejectsContinuousFamily) {
  auto ds = data::make_gaussian_mixture(2, 3, 2.0, 1.0, 20, 3);
  LinearHead h;
  h.weight = Tensor({2, 2});
  auto fam = TransformationFamily::shift(3, {2}, ParameterDomain::box({-2}, {2}), {});
  EXPECT_THROW(risk_gap_check(random_encoder(3, 2, 1), h, ds, fam), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Concentration

TEST(Tau, Examples) {
  EXPECT_EQ(tau(1.0, 0.0, 3.0), 0.0);
  EXPECT_EQ(tau(1.0, 4.0 / 2.5, 2.5), 4.0);
  // decreasing in sigma wherever L delta < 4; constant at L delta = 4
  for (double delta : {0.0, 0.1, 0.9}) {
    for (double L : {0.5, 1.0, 4.0}) EXPECT_GT(tau(0.9, delta, L), tau(1.0, delta, L));
  }
  EXPECT_EQ(tau(0.9, 1.0, 4.0), tau(1.0, 1.0, 4.0));
  EXPECT_THROW(tau(0.0, 0.1, 1.0), InvalidArgument);
  EXPECT_THROW(tau(1.1, 0.1, 1.0), InvalidArgument);
}

TEST(Tau, MonotoneOnGrid) {
  const double L = 1.0;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const double s = 0.05 + 0.05 * i, d = 0.1 * j;
      if (i + 1 < 20) EXPECT_GT(tau(s, d, L), tau(s + 0.05, d, L));
      if (j + 1 < 20) EXPECT_LT(tau(s, d, L), tau(s, d + 0.1, L));
    }
  }
}

TEST(SigmaDelta, IdentityFamilyExamples) {
  auto ds = labeled_points({{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {0, 0, 0, 0}, 1);
  auto id = TransformationFamily::axis_scale(2, {0}, ParameterDomain::box({0}, {2}), {}).with_grid({{1.0}});
  EXPECT_EQ(estimate_sigma_delta(ds, id, std::sqrt(2.0)).sigma, 1.0);
  EXPECT_EQ(estimate_sigma_delta(ds, id, 0.0).sigma, 0.25);
}

TEST(SigmaDelta, MatchesExactCliqueOnSmallClasses) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(23);
    auto ds = data::make_gaussian_mixture(2, 3, 1.0, 1.0, n, rng.next_u64());
    std::vector<data::Parameter> grid;
    for (int g = 0; g < 3; ++g) grid.push_back({rng.uniform(-1, 1)});
    auto fam = TransformationFamily::shift(3, {0}, ParameterDomain::box({-1}, {1}), {}).with_grid(grid);
    const double delta = rng.uniform(0.5, 2.5);
    auto sd = estimate_sigma_delta(ds, fam, delta);
    const auto members = ds.class_members();
    for (std::size_t k = 0; k < 2; ++k) {
      // soundness: every pair in the reported subset is within delta
      const auto& sub = sd.subsets[k];
      for (std::size_t a = 0; a < sub.size(); ++a) {
        for (std::size_t b = a + 1; b < sub.size(); ++b) {
          const Tensor ca = fam.grid_members()[0].apply_rows(Tensor({1, 3}, std::vector<double>(
              ds.samples.row(sub[a]).begin(), ds.samples.row(sub[a]).end())));
          double best = 1e300;
          for (const auto& t1 : fam.grid_members()) {
            for (const auto& t2 : fam.grid_members()) {
              best = std::min(best, std::sqrt(squared_distance(t1.apply(ds.samples.row(sub[a])),
                                                               t2.apply(ds.samples.row(sub[b])))));
            }
          }
          EXPECT_LE(best, delta);
          (void)ca;
        }
      }
      const std::size_t nk = members[k].size();
      std::vector<std::vector<bool>> adj(nk, std::vector<bool>(nk, false));
      for (std::size_t a = 0; a < nk; ++a) {
        for (std::size_t b = 0; b < nk; ++b) adj[a][b] = a != b && sd.distances[k].at(a, b) <= delta;
      }
      if (nk <= 12) {
        EXPECT_EQ(sd.method[k], "exhaustive");
        EXPECT_DOUBLE_EQ(sd.class_sigma[k], static_cast<double>(clique_number(adj)) / nk);
      } else {
        EXPECT_LE(sd.class_sigma[k], static_cast<double>(clique_number(adj)) / nk);
      }
    }
  }
}

TEST(SigmaDelta, CliqueHelpers) {
  std::vector<std::vector<bool>> adj(5, std::vector<bool>(5, false));
  auto link = [&](std::size_t a, std::size_t b) { adj[a][b] = adj[b][a] = true; };
  link(0, 1);
  link(2, 3);
  link(3, 4);
  link(2, 4);
  EXPECT_EQ(max_clique_exhaustive(adj), (std::vector<std::size_t>{2, 3, 4}));
  EXPECT_EQ(greedy_clique(adj), (std::vector<std::size_t>{2, 3, 4}));
  auto ds = labeled_points({{0, 0}}, {0}, 2);
  auto id = TransformationFamily::axis_scale(2, {0}, ParameterDomain::box({0}, {2}), {}).with_grid({{1.0}});
  EXPECT_THROW(estimate_sigma_delta(ds, id, 1.0), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Augmented-distribution diagnostics

namespace {

// Class is the sign of x1; augmentations only shift x2.
data::Dataset sign_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  data::Dataset ds;
  ds.samples = Tensor({n, 2});
  ds.labels.emplace(n);
  ds.class_count = 2;
  for (std::size_t i = 0; i < n; ++i) {
    ds.samples.at(i, 0) = (i % 2 ? 1.0 : -1.0) * (0.5 + rng.uniform());
    ds.samples.at(i, 1) = rng.normal();
    (*ds.labels)[i] = i % 2;
  }
  return ds;
}

const losses::FeatureMap class_indicator = [](const Tensor& x) {
  Tensor out({x.rows(), 2});
  for (std::size_t i = 0; i < x.rows(); ++i) out.at(i, x.at(i, 0) >= 0 ? 1 : 0) = 1.0;
  return out;
};

}  // namespace

TEST(AugmentedRisk, ExactCenterHeadHasNoCenterTerm) {
  auto ds = sign_dataset(200, 1);
  auto fam = TransformationFamily::shift(2, {1}, ParameterDomain::box({-1}, {1}), {});
  auto f = random_encoder(2, 2, 8);
  AugmentedOptions opt;
  opt.seed = 3;
  const auto sample = augmented_features(f, ds, fam, opt.repetitions, derive_seed(opt.seed, "augment"));
  const Tensor mu = class_centers(sample, 2);
  // h mu_k = e_k  <=>  h = (mu^T)^{-1}
  const double det = mu.at(0, 0) * mu.at(1, 1) - mu.at(0, 1) * mu.at(1, 0);
  LinearHead h;
  h.weight = Tensor::matrix({{mu.at(1, 1) / det, -mu.at(1, 0) / det}, {-mu.at(0, 1) / det, mu.at(0, 0) / det}});
  auto sd = estimate_sigma_delta(ds, fam.with_grid({{-1}, {1}}), 3.0);
  auto r = augmented_risk_report(f, h, ds, fam, sd, opt);
  EXPECT_NEAR(r.term("center_term"), 0.0, 1e-9);
  EXPECT_FALSE(r.pass.has_value());
}

TEST(AugmentedRisk, AlignedEncoderHasNoAlignmentTerm) {
  auto ds = sign_dataset(200, 2);
  auto fam = TransformationFamily::shift(2, {1}, ParameterDomain::box({-1}, {1}), {});
  LinearHead h;
  h.weight = Tensor::matrix({{1, 0}, {0, 1}});
  auto sd = estimate_sigma_delta(ds, fam.with_grid({{-1}, {1}}), 1.0);
  auto r = augmented_risk_report(class_indicator, h, ds, fam, sd);
  EXPECT_EQ(r.term("alignment_term"), 0.0);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_FALSE(r.fitted_constant.has_value());
}

TEST(CenterMargin, OrthonormalAndDuplicatedCenters) {
  auto ds = sign_dataset(200, 3);
  auto fam = TransformationFamily::shift(2, {1}, ParameterDomain::box({-1}, {1}), {});
  auto sd = estimate_sigma_delta(ds, fam.with_grid({{-1}, {1}}), 1.0);
  auto r = center_margin_diagnostics(class_indicator, ds, fam, sd, 1.0, 1.0);
  EXPECT_EQ(r.term("max_center_inner"), 0.0);
  EXPECT_TRUE(r.details["independent"].get<bool>());
  losses::FeatureMap constant = [](const Tensor& x) {
    Tensor out({x.rows(), 2});
    for (std::size_t i = 0; i < x.rows(); ++i) out.at(i, 0) = 1.0;
    return out;
  };
  auto c = center_margin_diagnostics(constant, ds, fam, sd, 1.0, 1.0);
  EXPECT_NEAR(c.term("sigma_min_centers"), 0.0, 1e-12);
  EXPECT_FALSE(c.details["independent"].get<bool>());
  EXPECT_FALSE(c.details["gamma_positive"].get<bool>());
}

TEST(CenterMargin, TrainedEncoderHasIndependentCenters) {
  auto ds = data::make_gaussian_mixture(2, 4, 3.0, 1.0, 256, 4);
  auto fam = TransformationFamily::shift(4, {2, 3}, ParameterDomain::box({-1, -1}, {1, 1}), {});
  train::NetworkSpec enc{train::Architecture::kMlp2, 4, 16, 2, train::Activation::kTanh, true};
  auto model = train::Model::initialize(enc, nullptr, 4);
  train::OptConfig opt;
  opt.epochs = 20;
  opt.batch_size = 64;
  auto trained = train::train(model, ds, fam, {losses::Objective::kArCL, 0.5, 4, 1.0}, opt);
  const losses::FeatureMap f = [&](const Tensor& x) { return trained.model.encoder.forward(x); };
  auto sd = estimate_sigma_delta(ds, fam.with_grid({{-1, -1}, {1, 1}}), 3.0);
  auto r = center_margin_diagnostics(f, ds, fam, sd, 1.0, 1.0);
  EXPECT_GT(r.term("sigma_min_centers"), 0.0);
}

TEST(AugmentedRisk, TracksTrainingTrajectory) {
  // Along training the alignment term and the augmented risk of the
  // best head on the augmented distribution should fall together.
  auto ds = data::make_gaussian_mixture(2, 4, 4.0, 0.5, 256, 5);
  auto fam = TransformationFamily::shift(4, {0, 1, 2, 3}, ParameterDomain::box({-1, -1, -1, -1}, {1, 1, 1, 1}), {});
  train::NetworkSpec enc{train::Architecture::kMlp2, 4, 16, 4, train::Activation::kTanh, true};
  auto model = train::Model::initialize(enc, nullptr, 5);
  auto sd = estimate_sigma_delta(ds, fam.with_grid({{-1, -1, -1, -1}, {1, 1, 1, 1}}), 1.0);
  train::OptConfig opt;
  opt.epochs = 1;
  opt.batch_size = 64;
  std::vector<double> align_terms, risks;
  for (int checkpoint = 0; checkpoint < 12; ++checkpoint) {
    const losses::FeatureMap f = [&](const Tensor& x) { return model.encoder.forward(x); };
    const auto sample = augmented_features(f, ds, fam, 16, derive_seed(0, "augment"));
    const auto probe = linear_probe_sq(sample.features, sample.labels, 2);
    auto r = augmented_risk_report(f, probe.head, ds, fam, sd);
    align_terms.push_back(r.term("alignment_term"));
    risks.push_back(r.lhs);
    opt.seed = checkpoint;
    model = train::train(model, ds, fam, {losses::Objective::kArCL, 0.5, 4, 1.0}, opt).model;
  }
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  const auto ra = ranks(align_terms), rr = ranks(risks);
  const double mean = (ra.size() - 1) / 2.0;
  double num = 0.0, da = 0.0, dr = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - mean) * (rr[i] - mean);
    da += (ra[i] - mean) * (ra[i] - mean);
    dr += (rr[i] - mean) * (rr[i] - mean);
  }
  EXPECT_GT(num / std::sqrt(da * dr), 0.0);
}

// ---------------------------------------------------------------------------
// View scaling

TEST(ViewScaling, ExhaustiveReachesExact) {
  auto ds = data::make_gaussian_mixture(2, 3, 1.0, 1.0, 40, 6);
  std::vector<data::Parameter> grid;
  for (int g = 0; g < 9; ++g) grid.push_back({-1.0 + 0.25 * g});
  auto fam = TransformationFamily::shift(3, {0}, ParameterDomain::box({-1}, {1}), {}).with_grid(grid);
  auto t = view_scaling_study(random_encoder(3, 2, 6), ds, fam, {2, 4, 9, 16}, 3, 1, data::SamplingMode::kExhaustive);
  EXPECT_EQ(t.rows[2].mean_gap, 0.0);
  EXPECT_EQ(t.rows[3].effective_m, 9u);
  EXPECT_EQ(t.notes.size(), 1u);
  EXPECT_TRUE(t.monotone);
}

TEST(ViewScaling, MoreViewsShrinkTheGap) {
  auto ds = data::make_gaussian_mixture(2, 3, 1.0, 1.0, 40, 7);
  std::vector<data::Parameter> grid;
  for (int g = 0; g <= 64; ++g) grid.push_back({-1.0 + g / 32.0});
  auto fam = TransformationFamily::shift(3, {0}, ParameterDomain::box({-1}, {1}), {}).with_grid(grid);
  auto t = view_scaling_study(random_encoder(3, 2, 7), ds, fam, {2, 4, 8}, 100, 3);
  EXPECT_TRUE(t.monotone);
  EXPECT_GE(t.rows[0].mean_gap, t.rows[2].mean_gap);
  std::ostringstream csv;
  t.write_csv(csv);
  const std::string text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_THROW(view_scaling_study(random_encoder(3, 2, 7), ds, fam, {4, 2}, 1, 1), InvalidArgument);
}
