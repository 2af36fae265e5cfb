#include "arcl/eval/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "arcl/data/generators.hpp"
#include "arcl/data/transform.hpp"
#include "arcl/numcore/error.hpp"
#include "arcl/numcore/linalg.hpp"
#include "arcl/numcore/rng.hpp"

namespace arcl::eval {

using data::format_double;

double BoundReport::term(const std::string& name) const {
  for (const auto& t : terms) {
    if (t.name == name) return t.value;
  }
  throw InvalidArgument("report has no term '" + name + "'");
}

nlohmann::json BoundReport::to_json() const {
  nlohmann::json t = nlohmann::json::object();
  for (const auto& x : terms) t[x.name] = x.value;
  nlohmann::json j{{"bound", bound}, {"lhs", lhs}, {"rhs", rhs}, {"terms", t}, {"margin", margin}};
  j["pass"] = pass ? nlohmann::json(*pass) : nlohmann::json(nullptr);
  j["fitted_constant"] = fitted_constant ? nlohmann::json(*fitted_constant) : nlohmann::json(nullptr);
  j["details"] = details;
  return j;
}

void BoundReport::write_csv(std::ostream& out) const {
  out << "bound,quantity,value\n";
  out << bound << ",lhs," << format_double(lhs) << '\n';
  out << bound << ",rhs," << format_double(rhs) << '\n';
  for (const auto& t : terms) out << bound << ',' << t.name << ',' << format_double(t.value) << '\n';
  out << bound << ",margin," << format_double(margin) << '\n';
  if (pass) out << bound << ",pass," << (*pass ? 1 : 0) << '\n';
  if (fitted_constant) out << bound << ",fitted_constant," << format_double(*fitted_constant) << '\n';
}

// ---------------------------------------------------------------------------

double toy_risk(double epsilon, double c) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  const double b = std::sqrt(epsilon) / 2.0 * c;
  return std::acos(1.0 / std::sqrt(1.0 + b * b)) / std::numbers::pi;
}

nlohmann::json ToyReport::to_json() const {
  return {{"epsilon", epsilon},
          {"n", n},
          {"seed", seed},
          {"scale", scale},
          {"analytic", {{"align", analytic_alignment}, {"risk0", analytic_risk_identity}, {"risk1", analytic_risk_scaled}}},
          {"empirical",
           {{"align", empirical_alignment.mean},
            {"align_standard_error", empirical_alignment.standard_error},
            {"risk0", empirical_risk_identity},
            {"risk1", empirical_risk_scaled}}}};
}

ToyReport toy_counterexample(double epsilon, std::size_t n, std::uint64_t seed) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be positive");
  ToyReport r;
  r.epsilon = epsilon;
  r.n = n;
  r.seed = seed;
  r.scale = 2.0 / std::sqrt(epsilon);
  r.analytic_alignment = epsilon / 2.0;
  r.analytic_risk_identity = toy_risk(epsilon, 0.0);
  r.analytic_risk_scaled = toy_risk(epsilon, r.scale);

  const data::Dataset ds = data::make_toy_axis_dataset(n, derive_seed(seed, "data"));
  const double w = std::sqrt(epsilon) / 2.0;
  const losses::FeatureMap f = [w](const Tensor& x) {
    Tensor out({x.rows(), 1});
    for (std::size_t i = 0; i < x.rows(); ++i) out.at(i, 0) = x.at(i, 0) + w * x.at(i, 1);
    return out;
  };
  const data::SamplingDistribution pi{data::SamplingDistribution::Type::kTruncatedNormal, {0.0}, {1.0}};
  const auto family = data::TransformationFamily::axis_scale(2, {1}, data::ParameterDomain::box({-6.0}, {6.0}), pi);
  r.empirical_alignment = losses::alignment_loss(f, ds, family, 1, derive_seed(seed, "alignment"));
  auto risk_at = [&](double c) {
    const auto t = data::Transformation::axis_scale({1.0, c});
    return risk_01(f(t.apply_rows(ds.samples)), 0.0, *ds.labels);
  };
  r.empirical_risk_identity = risk_at(0.0);
  r.empirical_risk_scaled = risk_at(r.scale);
  return r;
}

// ---------------------------------------------------------------------------

namespace {

double max_abs_gap(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

std::string domain_name(const data::Transformation& t) { return t.to_json().dump(); }

const std::vector<std::size_t>& labels_of(const data::Dataset& ds) {
  if (!ds.labeled()) throw InvalidArgument("evaluation needs a labeled dataset");
  return *ds.labels;
}

}  // namespace

nlohmann::json DomainRiskReport::to_json() const {
  return {{"domains", domains},
          {"risk", risk},
          {"error_01", error_01},
          {"head_norm", head_norm},
          {"transfer", transfer},
          {"transfer_01", transfer_01},
          {"shared_risk", shared_risk},
          {"shared_error_01", shared_error_01},
          {"shared_gap", shared_gap},
          {"shared_gap_01", shared_gap_01},
          {"transfer_gap", transfer_gap},
          {"transfer_gap_01", transfer_gap_01}};
}

void DomainRiskReport::write_csv(std::ostream& out) const {
  out << "head,domain,square_risk,error_01\n";
  for (std::size_t a = 0; a < domains.size(); ++a) {
    for (std::size_t b = 0; b < domains.size(); ++b) {
      out << a << ',' << b << ',' << format_double(transfer[a][b]) << ',' << format_double(transfer_01[a][b]) << '\n';
    }
  }
  for (std::size_t b = 0; b < domains.size(); ++b) {
    out << "shared," << b << ',' << format_double(shared_risk[b]) << ',' << format_double(shared_error_01[b]) << '\n';
  }
}

DomainRiskReport domain_risk_report(const losses::FeatureMap& f, const data::Dataset& dataset,
                                    const std::vector<data::Transformation>& domains, const ProbeOptions& options) {
  const auto& labels = labels_of(dataset);
  if (domains.empty()) throw InvalidArgument("domain report needs at least one domain");
  const std::size_t k = dataset.class_count;
  const std::size_t nd = domains.size();

  std::vector<Tensor> feats;
  for (const auto& t : domains) feats.push_back(f(t.apply_rows(dataset.samples)));

  DomainRiskReport r;
  std::vector<LinearHead> heads;
  for (std::size_t a = 0; a < nd; ++a) {
    r.domains.push_back(domain_name(domains[a]));
    auto probe = linear_probe_sq(feats[a], labels, k, options);
    probe.head.trained_on = r.domains.back();
    heads.push_back(probe.head);
    r.head_norm.push_back(probe.head.norm());
  }
  r.transfer.assign(nd, std::vector<double>(nd, 0.0));
  r.transfer_01.assign(nd, std::vector<double>(nd, 0.0));
  for (std::size_t a = 0; a < nd; ++a) {
    for (std::size_t b = 0; b < nd; ++b) {
      r.transfer[a][b] = square_risk(heads[a], feats[b], labels);
      r.transfer_01[a][b] = risk_01(heads[a], feats[b], labels);
    }
    r.risk.push_back(r.transfer[a][a]);
    r.error_01.push_back(r.transfer_01[a][a]);
  }

  const std::size_t n = dataset.size(), p = feats[0].cols();
  Tensor pooled({n * nd, p});
  std::vector<std::size_t> pooled_labels;
  for (std::size_t a = 0; a < nd; ++a) {
    std::copy(feats[a].values().begin(), feats[a].values().end(), pooled.data().begin() + a * n * p);
    pooled_labels.insert(pooled_labels.end(), labels.begin(), labels.end());
  }
  LinearHead shared = linear_probe_sq(pooled, pooled_labels, k, options).head;
  for (std::size_t b = 0; b < nd; ++b) {
    r.shared_risk.push_back(square_risk(shared, feats[b], labels));
    r.shared_error_01.push_back(risk_01(shared, feats[b], labels));
  }
  r.shared_gap = max_abs_gap(r.shared_risk);
  r.shared_gap_01 = max_abs_gap(r.shared_error_01);
  for (std::size_t a = 0; a < nd; ++a) {
    for (std::size_t b = 0; b < nd; ++b) {
      r.transfer_gap = std::max(r.transfer_gap, std::abs(r.transfer[a][b] - r.transfer[b][b]));
      r.transfer_gap_01 = std::max(r.transfer_gap_01, std::abs(r.transfer_01[a][b] - r.transfer_01[b][b]));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

BoundReport risk_gap_check(const losses::FeatureMap& f, const LinearHead& head, const data::Dataset& dataset,
                           const data::TransformationFamily& family) {
  const auto& labels = labels_of(dataset);
  if (!family.finite()) throw InvalidArgument("risk-gap check needs a finite family (exact worst case)");
  if (head.has_bias()) throw InvalidArgument("risk-gap check is stated for a linear head without intercept");
  const auto members = family.grid_members();

  std::vector<double> risks;
  for (const auto& t : members) {
    const Tensor z = f(t.apply_rows(dataset.samples));
    for (std::size_t i = 0; i < z.rows(); ++i) {
      if (std::abs(norm(z.row(i)) - 1.0) > 1e-9) throw InvalidArgument("risk-gap check needs unit-norm features");
    }
    risks.push_back(square_risk(head, z, labels));
  }
  const double ar = losses::ar_loss_exact(f, dataset, family);
  const double h = head.norm();
  const double constant = h * (2.0 * h + 2.0);

  BoundReport r;
  r.bound = "worst-case-risk-gap";
  r.lhs = max_abs_gap(risks);
  r.rhs = constant * std::sqrt(ar);
  r.terms = {{"head_norm", h},
             {"constant", constant},
             {"ar_loss", ar},
             {"sqrt_ar_loss", std::sqrt(ar)},
             {"linear_form", constant * ar}};
  r.margin = r.rhs - r.lhs;
  // Both sides are exact finite sums; the slack absorbs rounding only.
  r.pass = r.lhs <= r.rhs + 1e-12;
  r.details = {{"domain_risks", risks}, {"domains", members.size()}};
  return r;
}

// ---------------------------------------------------------------------------

AugmentedSample augmented_features(const losses::FeatureMap& f, const data::Dataset& dataset,
                                   const data::TransformationFamily& family, std::size_t repetitions,
                                   std::uint64_t seed) {
  const auto& labels = labels_of(dataset);
  if (repetitions < 1) throw InvalidArgument("need at least one repetition");
  const std::size_t n = dataset.size(), d = dataset.dim();
  Tensor x({n * repetitions, d});
  AugmentedSample s;
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    Rng rng(derive_seed(seed, rep));
    for (std::size_t i = 0; i < n; ++i) {
      family.realize(family.sample_parameter(rng)).apply(dataset.samples.row(i), x.row(rep * n + i));
    }
    s.labels.insert(s.labels.end(), labels.begin(), labels.end());
  }
  s.features = f(x);
  return s;
}

Tensor class_centers(const AugmentedSample& sample, std::size_t classes, std::vector<double>* weights) {
  const std::size_t p = sample.features.cols();
  Tensor mu({classes, p});
  std::vector<double> count(classes, 0.0);
  for (std::size_t r = 0; r < sample.labels.size(); ++r) {
    const std::size_t k = sample.labels[r];
    count[k] += 1.0;
    for (std::size_t c = 0; c < p; ++c) mu.at(k, c) += sample.features.at(r, c);
  }
  for (std::size_t k = 0; k < classes; ++k) {
    if (count[k] == 0.0) throw InvalidArgument("class " + std::to_string(k) + " has no samples");
    for (std::size_t c = 0; c < p; ++c) mu.at(k, c) /= count[k];
  }
  if (weights) {
    weights->assign(classes, 0.0);
    for (std::size_t k = 0; k < classes; ++k) (*weights)[k] = count[k] / static_cast<double>(sample.labels.size());
  }
  return mu;
}

BoundReport augmented_risk_report(const losses::FeatureMap& f, const LinearHead& head, const data::Dataset& dataset,
                                  const data::TransformationFamily& family, const SigmaDelta& sd,
                                  const AugmentedOptions& options) {
  const std::size_t k = dataset.class_count;
  const auto sample = augmented_features(f, dataset, family, options.repetitions, derive_seed(options.seed, "augment"));
  std::vector<double> weights;
  const Tensor mu = class_centers(sample, k, &weights);
  const double lhs = square_risk(head, sample.features, sample.labels);
  const auto align = losses::alignment_loss(f, dataset, family, options.alignment_pair_draws,
                                            derive_seed(options.seed, "alignment"));

  const double h = head.norm();
  const double align_term = h * std::sqrt(static_cast<double>(k) * sd.sigma) * std::pow(align.mean, 0.25);
  const double t = tau(sd.sigma, sd.delta, options.lipschitz);
  const double tau_term = h * t;
  double center_term = 0.0;
  const Tensor hmu = head.scores(mu);
  for (std::size_t c = 0; c < k; ++c) {
    double sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double e = hmu.at(c, j) - (c == j ? 1.0 : 0.0);
      sq += e * e;
    }
    center_term += weights[c] * std::sqrt(sq);
  }

  BoundReport r;
  r.bound = "augmented-risk";
  r.lhs = lhs;
  r.terms = {{"alignment_term", align_term},
             {"tau_term", tau_term},
             {"center_term", center_term},
             {"alignment", align.mean},
             {"alignment_standard_error", align.standard_error},
             {"tau", t},
             {"sigma", sd.sigma},
             {"delta", sd.delta},
             {"head_norm", h},
             {"lipschitz", options.lipschitz}};
  const double residual = std::max(0.0, lhs - tau_term - center_term);
  if (align_term > 0.0) {
    r.fitted_constant = residual / align_term;
    r.rhs = *r.fitted_constant * align_term + tau_term + center_term;
  } else {
    r.rhs = tau_term + center_term;
    r.details["note"] = "alignment term is zero; constant not identifiable";
  }
  r.margin = r.rhs - r.lhs;
  r.details["repetitions"] = options.repetitions;
  return r;
}

BoundReport center_margin_diagnostics(const losses::FeatureMap& f, const data::Dataset& dataset,
                                      const data::TransformationFamily& family, const SigmaDelta& sd, double c1,
                                      double c2, const AugmentedOptions& options) {
  const std::size_t k = dataset.class_count;
  if (dataset.size() < k) throw InvalidArgument("need at least as many samples as classes");
  if (!(c1 >= 0.0) || !(c2 >= 0.0)) throw InvalidArgument("constants c1, c2 must be non-negative");
  const auto sample = augmented_features(f, dataset, family, options.repetitions, derive_seed(options.seed, "augment"));
  const Tensor mu = class_centers(sample, k);
  const auto align = losses::alignment_loss(f, dataset, family, options.alignment_pair_draws,
                                            derive_seed(options.seed, "alignment"));
  const Tensor inner = linalg::matmul_nt(mu, mu);
  double max_inner = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (a != b) max_inner = std::max(max_inner, std::abs(inner.at(a, b)));
    }
  }
  const auto sv = linalg::singular_values(mu);
  const double sigma_min = sv.size() < k ? 0.0 : sv.back();
  const double t = tau(sd.sigma, sd.delta, options.lipschitz);
  const double a4 = std::pow(align.mean, 0.25);
  const double gamma = 1.0 - c1 * a4 - t - c2 * max_inner;

  // Best linear head on the augmented sample stands in for R(f; D_pi).
  const auto probe = linear_probe_sq(sample.features, sample.labels, k);

  BoundReport r;
  r.bound = "center-margin";
  r.lhs = probe.risk;
  r.terms = {{"gamma_reg", gamma},    {"alignment", align.mean}, {"alignment_quarter", a4},
             {"tau", t},              {"max_center_inner", max_inner}, {"sigma_min_centers", sigma_min},
             {"c1", c1},              {"c2", c2}};
  const bool independent = sigma_min > 1e-10;
  if (gamma > 0.0) {
    const double shape = (a4 + t) / gamma;
    r.terms.push_back({"rhs_shape", shape});
    if (shape > 0.0) {
      r.fitted_constant = r.lhs / shape;
      r.rhs = *r.fitted_constant * shape;
    }
  } else {
    r.details["note"] = "gamma_reg <= 0: the bound is vacuous";
  }
  r.margin = r.rhs - r.lhs;
  nlohmann::json centers = nlohmann::json::array();
  for (std::size_t a = 0; a < k; ++a) centers.push_back(std::vector<double>(mu.row(a).begin(), mu.row(a).end()));
  r.details["centers"] = centers;
  r.details["independent"] = independent;
  r.details["gamma_positive"] = gamma > 0.0;
  return r;
}

// ---------------------------------------------------------------------------

nlohmann::json ViewScalingTable::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows) {
    rs.push_back({{"m", r.m}, {"effective_m", r.effective_m}, {"mean_gap", r.mean_gap}, {"max_gap", r.max_gap},
                  {"min_gap", r.min_gap}});
  }
  nlohmann::json j{{"exact", exact}, {"repeats", repeats}, {"seed", seed}, {"rows", rs}, {"monotone", monotone},
                   {"notes", notes}};
  j["loglog_slope"] = loglog_slope ? nlohmann::json(*loglog_slope) : nlohmann::json(nullptr);
  return j;
}

void ViewScalingTable::write_csv(std::ostream& out) const {
  out << "m,effective_m,mean_gap,max_gap,min_gap\n";
  for (const auto& r : rows) {
    out << r.m << ',' << r.effective_m << ',' << format_double(r.mean_gap) << ',' << format_double(r.max_gap) << ','
        << format_double(r.min_gap) << '\n';
  }
}

ViewScalingTable view_scaling_study(const losses::FeatureMap& f, const data::Dataset& dataset,
                                    const data::TransformationFamily& family, const std::vector<std::size_t>& m_list,
                                    std::size_t repeats, std::uint64_t seed, data::SamplingMode mode) {
  if (!family.finite()) throw InvalidArgument("view scaling needs a finite family for the exact reference");
  if (m_list.empty() || repeats == 0) throw InvalidArgument("view scaling needs m values and repeats");
  for (std::size_t i = 0; i < m_list.size(); ++i) {
    if (m_list[i] < 2) throw InvalidArgument("m must be at least 2");
    if (i && m_list[i] <= m_list[i - 1]) throw InvalidArgument("m values must be increasing");
  }
  const std::size_t grid = family.grid()->size();
  ViewScalingTable t;
  t.repeats = repeats;
  t.seed = seed;
  t.exact = losses::ar_loss_exact(f, dataset, family);

  std::vector<std::vector<double>> gaps(m_list.size());
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    const std::uint64_t s = derive_seed(seed, rep);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m_list.size(); ++i) {
      const double g = t.exact - losses::ar_loss_empirical(f, dataset, family, m_list[i], s, mode);
      if (g > prev) t.monotone = false;
      prev = g;
      gaps[i].push_back(g);
    }
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < m_list.size(); ++i) {
    ViewScalingRow row;
    row.m = m_list[i];
    row.effective_m = mode == data::SamplingMode::kExhaustive ? std::min(m_list[i], grid) : m_list[i];
    if (row.effective_m != row.m) {
      t.notes.push_back("m = " + std::to_string(row.m) + " clamped to the grid size " + std::to_string(grid));
    }
    double sum = 0.0;
    row.max_gap = -std::numeric_limits<double>::infinity();
    row.min_gap = std::numeric_limits<double>::infinity();
    for (double g : gaps[i]) {
      sum += g;
      row.max_gap = std::max(row.max_gap, g);
      row.min_gap = std::min(row.min_gap, g);
    }
    row.mean_gap = sum / static_cast<double>(repeats);
    if (row.mean_gap > 0.0) {
      lx.push_back(std::log(static_cast<double>(row.m)));
      ly.push_back(std::log(row.mean_gap));
    }
    t.rows.push_back(row);
  }
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    t.loglog_slope = sxy / sxx;
  }
  return t;
}

}  // namespace arcl::eval
