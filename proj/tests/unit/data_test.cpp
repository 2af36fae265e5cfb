#include <gtest/gtest.h>

#include <cmath>

#include "arcl/data/dataset.hpp"
#include "arcl/data/family.hpp"
#include "arcl/data/generators.hpp"
#include "arcl/data/transform.hpp"
#include "arcl/numcore/error.hpp"

using namespace arcl;
using namespace arcl::data;

namespace {

// Least-squares probe on a column subset with intercept, fitted on `train`
// and scored on `test` by the sign of the prediction. Independent of eval/.
double block_probe_error(const Dataset& train, const Dataset& test, std::size_t first, std::size_t count) {
  const std::size_t p = count + 1;
  std::vector<double> a(p * p, 0.0), rhs(p, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    std::vector<double> f(p, 1.0);
    for (std::size_t j = 0; j < count; ++j) f[j] = train.samples.at(i, first + j);
    const double t = train.label(i) ? 1.0 : -1.0;
    for (std::size_t r = 0; r < p; ++r) {
      rhs[r] += f[r] * t;
      for (std::size_t c = 0; c < p; ++c) a[r * p + c] += f[r] * f[c];
    }
  }
  // Gaussian elimination with partial pivoting.
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r) {
      if (std::abs(a[r * p + c]) > std::abs(a[piv * p + c])) piv = r;
    }
    for (std::size_t k = 0; k < p; ++k) std::swap(a[c * p + k], a[piv * p + k]);
    std::swap(rhs[c], rhs[piv]);
    for (std::size_t r = c + 1; r < p; ++r) {
      const double f = a[r * p + c] / a[c * p + c];
      for (std::size_t k = c; k < p; ++k) a[r * p + k] -= f * a[c * p + k];
      rhs[r] -= f * rhs[c];
    }
  }
  std::vector<double> w(p);
  for (std::size_t r = p; r-- > 0;) {
    double v = rhs[r];
    for (std::size_t k = r + 1; k < p; ++k) v -= a[r * p + k] * w[k];
    w[r] = v / a[r * p + r];
  }
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    double s = w[count];
    for (std::size_t j = 0; j < count; ++j) s += w[j] * test.samples.at(i, first + j);
    if ((s >= 0.0 ? 1u : 0u) != test.label(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

TransformationFamily prop41_family() {
  SamplingDistribution pi{SamplingDistribution::Type::kTruncatedNormal, {0.0}, {1.0}};
  return TransformationFamily::axis_scale(2, {1}, ParameterDomain::box({-6.0}, {6.0}), pi);
}

}  // namespace

TEST(ToyDataset, LabelsFollowFirstCoordinate) {
  auto ds = make_toy_axis_dataset(1000, 1);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(ds.label(i), ds.samples.at(i, 0) >= 0.0 ? 1u : 0u);
  }
  EXPECT_THROW(make_toy_axis_dataset(0, 1), InvalidArgument);
}

TEST(ToyDataset, LabelBalance) {
  auto ds = make_toy_axis_dataset(100000, 2);
  double ones = 0;
  for (auto y : *ds.labels) ones += static_cast<double>(y);
  EXPECT_NEAR(ones / 1e5, 0.5, 0.01);
}

TEST(Mixture, WellSeparatedNearestMeanIsPerfect) {
  auto ds = make_gaussian_mixture(2, 4, 10.0, 0.1, 1000, 3);
  auto members = ds.class_members();
  std::vector<std::vector<double>> means(2, std::vector<double>(4, 0.0));
  for (std::size_t k = 0; k < 2; ++k) {
    for (auto i : members[k]) {
      for (std::size_t j = 0; j < 4; ++j) means[k][j] += ds.samples.at(i, j) / static_cast<double>(members[k].size());
    }
  }
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double d0 = squared_distance(ds.samples.row(i), means[0]);
    const double d1 = squared_distance(ds.samples.row(i), means[1]);
    if ((d1 < d0 ? 1u : 0u) != ds.label(i)) ++wrong;
  }
  EXPECT_EQ(wrong, 0u);
}

TEST(Mixture, ZeroSeparationMeansCoincide) {
  const std::size_t n = 4000, k = 2;
  const double sd = 0.5;
  auto ds = make_gaussian_mixture(k, 3, 0.0, sd, n, 4);
  auto members = ds.class_members();
  const double tol = 3.0 * sd / std::sqrt(static_cast<double>(n / k));
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < 3; ++j) {
      double m = 0.0;
      for (auto i : members[c]) m += ds.samples.at(i, j);
      EXPECT_LT(std::abs(m / static_cast<double>(members[c].size())), tol);
    }
  }
}

TEST(Mixture, MinimalInstance) {
  auto ds = make_gaussian_mixture(2, 2, 1.0, 1.0, 2, 5);
  EXPECT_EQ(ds.label(0), 0u);
  EXPECT_EQ(ds.label(1), 1u);
  EXPECT_THROW(make_gaussian_mixture(3, 2, 1.0, 1.0, 10, 5), InvalidArgument);
  EXPECT_THROW(make_gaussian_mixture(2, 2, 1.0, 1.0, 1, 5), InvalidArgument);
}

TEST(Shortcut, ProbeErrorTracksCorrelation) {
  const std::size_t n = 2000;
  auto err = [&](double corr) {
    auto train = make_concat_shortcut_dataset(n, corr, 10);
    auto test = make_concat_shortcut_dataset(n, corr, 11);
    return block_probe_error(train, test, 0, 2);
  };
  EXPECT_LE(err(1.0), 0.05);
  EXPECT_NEAR(err(0.0), 0.5, 0.03);
  EXPECT_NEAR(err(0.5), 0.25, 0.03);
  EXPECT_THROW(make_concat_shortcut_dataset(10, 1.5, 1), InvalidArgument);
  EXPECT_THROW(make_concat_shortcut_dataset(10, -0.1, 1), InvalidArgument);
}

TEST(Transformation, Examples) {
  const std::vector<double> x{0.7, -1.3};
  EXPECT_EQ(apply_transformation(Transformation::axis_scale({1.0, 2.5}), x), (std::vector<double>{0.7, -1.3 * 2.5}));
  EXPECT_EQ(apply_transformation(Transformation::rotation(0.0), x), x);
  auto comp = Transformation::compose({Transformation::axis_scale({2, 1}), Transformation::axis_scale({1, 3})});
  EXPECT_EQ(apply_transformation(comp, std::vector<double>{1, 1}), (std::vector<double>{2, 3}));
  EXPECT_THROW(apply_transformation(Transformation::axis_scale({1, 1, 1}), x), ShapeError);
  EXPECT_THROW(apply_transformation(Transformation::rotation(0.1, 0, 3), x), ShapeError);
  EXPECT_THROW(Transformation::compose({}), InvalidArgument);
}

TEST(Transformation, RotationQuarterTurn) {
  auto out = apply_transformation(Transformation::rotation(M_PI / 2), std::vector<double>{1, 0, 5});
  EXPECT_NEAR(out[0], 0.0, 1e-15);
  EXPECT_NEAR(out[1], 1.0, 1e-15);
  EXPECT_EQ(out[2], 5.0);
}

TEST(Transformation, PureFunction) {
  Rng rng(1);
  auto fam = TransformationFamily::rotation(3, 0, 2, ParameterDomain::box({-3}, {3}), {});
  for (int trial = 0; trial < 100; ++trial) {
    auto t = fam.realize(fam.sample_parameter(rng));
    std::vector<double> x{rng.normal(), rng.normal(), rng.normal()};
    EXPECT_EQ(t.apply(x), t.apply(x));
  }
}

TEST(InduceDomain, Examples) {
  auto ds = make_toy_axis_dataset(200, 7);
  auto same = induce_domain(ds, Transformation::axis_scale({1, 1}));
  EXPECT_EQ(same.samples, ds.samples);
  auto flat = induce_domain(ds, Transformation::axis_scale({1, 0}));
  for (std::size_t i = 0; i < flat.size(); ++i) EXPECT_EQ(flat.samples.at(i, 1), 0.0);
  EXPECT_EQ(flat.labels, ds.labels);
  EXPECT_THROW(induce_domain(ds, Transformation::shift({1, 2, 3})), ShapeError);
}

TEST(Family, ExhaustiveGrid) {
  auto fam = prop41_family().with_grid({{0.5}, {1.0}, {2.0}});
  auto ts = sample_transformations(fam, 3, std::uint64_t{4}, SamplingMode::kExhaustive);
  ASSERT_EQ(ts.size(), 3u);
  EXPECT_EQ(ts[0].theta(), (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(ts[1].theta(), (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(ts[2].theta(), (std::vector<double>{1.0, 2.0}));
}

TEST(Family, GaussianPiMean) {
  auto fam = prop41_family();
  Rng rng(12);
  double s = 0.0;
  for (int i = 0; i < 100000; ++i) s += fam.sample_parameter(rng)[0];
  EXPECT_NEAR(s / 1e5, 0.0, 0.02);
}

TEST(Family, SameSeedSameDraws) {
  auto fam = prop41_family();
  auto a = sample_transformations(fam, 5, std::uint64_t{99});
  auto b = sample_transformations(fam, 5, std::uint64_t{99});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].theta(), b[i].theta());
  EXPECT_THROW(sample_transformations(fam, 1, std::uint64_t{1}), InvalidArgument);
}

TEST(Family, PiSupport) {
  std::vector<TransformationFamily> families{
      prop41_family(),
      TransformationFamily::shift(3, {0, 2}, ParameterDomain::box({-1, 0}, {1, 0.5}), {}),
      TransformationFamily::shift(3, {0, 1}, ParameterDomain::ball({0, 0}, 0.7), {}),
      TransformationFamily::axis_scale(4, {0, 1}, ParameterDomain::box({0, 0.5}, {1, 2}),
                                       {SamplingDistribution::Type::kTruncatedNormal, {1, 1}, {0.5, 2.0}}),
      TransformationFamily::rotation(2, 0, 1, ParameterDomain::box({-0.3}, {0.3}), {}),
  };
  for (const auto& fam : families) {
    Rng rng(5);
    for (int i = 0; i < 1000000; ++i) {
      auto theta = fam.sample_parameter(rng);
      ASSERT_TRUE(fam.domain().contains(theta));
    }
  }
}

TEST(Family, IdentityElementIsBitExact) {
  Rng rng(3);
  std::vector<TransformationFamily> families{
      prop41_family(),
      TransformationFamily::shift(3, {1}, ParameterDomain::box({-1}, {1}), {}),
      TransformationFamily::rotation(3, 0, 1, ParameterDomain::box({-1}, {1}), {}),
      TransformationFamily::mask(3, {0, 2}, {{1, 1}, {0, 1}}),
  };
  for (const auto& fam : families) {
    auto id = fam.realize(fam.identity_parameter());
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> x{rng.normal(), rng.normal(), rng.normal()};
      x.resize(fam.data_dim());
      EXPECT_EQ(id.apply(x), x);
    }
  }
  EXPECT_THROW(TransformationFamily::axis_scale(2, {1}, ParameterDomain::box({2}, {3}), {}), InvalidArgument);
}

TEST(Family, LipschitzAndDensity) {
  auto fam = TransformationFamily::axis_scale(2, {1}, ParameterDomain::box({-3}, {2}), {});
  EXPECT_EQ(fam.lipschitz_bound(), 3.0);
  EXPECT_DOUBLE_EQ(fam.density_floor(), 0.2);
  auto grid = fam.with_grid({{1}, {0.5}});
  EXPECT_EQ(grid.lipschitz_bound(), 1.0);
  EXPECT_EQ(grid.density_floor(), 0.5);
}

TEST(Family, JsonRoundTrip) {
  auto spec = nlohmann::json::parse(R"({"kind":"axis-scale","dim":2,"coords":[1],
    "domain":{"type":"box","lo":[-6],"hi":[6]},"pi":{"type":"truncated-normal","mean":[0],"std":[1]},
    "grid":[[1],[0],[2]]})");
  auto fam = TransformationFamily::from_json(spec);
  EXPECT_EQ(fam.grid()->size(), 3u);
  EXPECT_EQ(TransformationFamily::from_json(fam.to_json()).to_json(), fam.to_json());
  spec["bogus"] = 1;
  EXPECT_THROW(TransformationFamily::from_json(spec), InvalidArgument);
}

TEST(DatasetFile, RoundTripIsExact) {
  auto ds = make_gaussian_mixture(3, 4, 2.0, 0.7, 50, 8);
  auto text = format_dataset(ds);
  EXPECT_EQ(text.rfind("#JSON{", 0), 0u);
  auto back = parse_dataset(text);
  EXPECT_EQ(back.samples, ds.samples);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.class_count, 3u);
  EXPECT_EQ(format_dataset(back), text);
}

TEST(DatasetFile, RejectsMalformed) {
  EXPECT_THROW(parse_dataset("1,2,0\n"), InvalidArgument);
  EXPECT_THROW(parse_dataset("#JSON{\"n\":1,\"d\":2,\"K\":2}\n1,2\n"), InvalidArgument);
  EXPECT_THROW(parse_dataset("#JSON{\"n\":1,\"d\":2,\"K\":2}\n1,2,5\n"), InvalidArgument);
}
