#include <gtest/gtest.h>

#include <cmath>

#include "arcl/numcore/error.hpp"
#include "arcl/numcore/graph.hpp"
#include "arcl/numcore/linalg.hpp"
#include "arcl/numcore/rng.hpp"
#include "fd_oracle.hpp"

using namespace arcl;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

}  // namespace

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
}

TEST(Normalize, ThreeFourFive) {
  auto out = l2_normalize(Tensor::vector({3, 4}));
  EXPECT_DOUBLE_EQ(out[0], 0.6);
  EXPECT_DOUBLE_EQ(out[1], 0.8);
}

TEST(Normalize, ScaleInvariant) {
  auto u = l2_normalize(Tensor::vector({0.3, -0.2, 0.9}));
  Tensor small = u;
  for (std::size_t i = 0; i < small.size(); ++i) small[i] *= 1e-3;
  auto back = l2_normalize(small);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(back[i], u[i], 1e-15);
}

TEST(Normalize, ZeroVectorIsDegenerate) {
  EXPECT_THROW(l2_normalize(Tensor::vector({0, 0})), DegenerateEmbedding);
  EXPECT_THROW(l2_normalize(Tensor::vector({1e-10, 0})), DegenerateEmbedding);
}

TEST(Normalize, UnitNormProperty) {
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const double scale = std::pow(10.0, rng.uniform(-6, 6));
    auto v = random_tensor({1 + rng.below(16)}, rng, scale);
    if (norm(v.data()) <= kNormEpsilon) continue;
    EXPECT_LT(std::abs(norm(l2_normalize(v).data()) - 1.0), 1e-12);
  }
}

TEST(Graph, AffineIdentity) {
  GraphBuilder b;
  auto x = b.input("x", {2});
  auto w = b.parameter("W", {2, 2});
  auto bias = b.parameter("b", {2});
  auto y = b.affine(x, w, bias);
  auto g = b.build(y);
  auto out = evaluate(g, {{"x", Tensor::vector({3, -1})}, {"W", linalg::identity(2)}, {"b", Tensor::vector({0, 0})}});
  EXPECT_EQ(out, Tensor::vector({3, -1}));
}

TEST(Graph, NormalizeNode) {
  GraphBuilder b;
  auto x = b.input("x", {2});
  auto g = b.build(b.l2_normalize(x));
  auto out = evaluate(g, {{"x", Tensor::vector({3, 4})}});
  EXPECT_DOUBLE_EQ(out[0], 0.6);
  EXPECT_DOUBLE_EQ(out[1], 0.8);
}

TEST(Graph, TanhOfAffine) {
  GraphBuilder b;
  auto x = b.input("x", {2});
  auto w = b.parameter("W", {1, 2});
  auto bias = b.parameter("b", {1});
  auto g = b.build(b.tanh(b.affine(x, w, bias)));
  auto out = evaluate(g, {{"x", Tensor::vector({0, 5})}, {"W", Tensor::matrix({{1, 0}})}, {"b", Tensor::vector({0})}});
  EXPECT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], 0.0);
}

TEST(Graph, ShapeMismatchNamesNode) {
  GraphBuilder b;
  auto x = b.input("x", {3});
  auto w = b.parameter("W", {2, 2});
  auto bias = b.parameter("b", {2});
  try {
    b.affine(x, w, bias);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("node 3 (affine)"), std::string::npos) << e.what();
  }

  GraphBuilder ok;
  auto xi = ok.input("x", {2});
  auto g = ok.build(ok.squared_norm(xi));
  try {
    evaluate(g, {{"x", Tensor::vector({1, 2, 3})}});
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("'x'"), std::string::npos) << e.what();
  }
}

TEST(Graph, UnreferencedParameterRejected) {
  GraphBuilder b;
  auto x = b.input("x", {2});
  b.parameter("unused", {2});
  EXPECT_THROW(b.build(b.squared_norm(x)), InvalidArgument);
}

TEST(Graph, DegenerateNormalizationDuringEvaluate) {
  GraphBuilder b;
  auto x = b.input("x", {2});
  auto g = b.build(b.l2_normalize(x));
  EXPECT_THROW(evaluate(g, {{"x", Tensor::vector({0, 0})}}), DegenerateEmbedding);
}

TEST(Gradient, SquaredNorm) {
  GraphBuilder b;
  auto x = b.parameter("x", {2});
  auto g = b.build(b.squared_norm(x));
  auto grads = gradient(g, {{"x", Tensor::vector({1, 2})}});
  EXPECT_EQ(grads.at("x"), Tensor::vector({2, 4}));
}

TEST(Gradient, MinSelectionSubgradient) {
  GraphBuilder b;
  auto v = b.parameter("v", {2});
  auto g = b.build(b.mean(b.group_min(v, {{0, 1}})));
  auto res = value_and_gradient(g, {{"v", Tensor::vector({1, 2})}});
  EXPECT_EQ(res.loss, 1.0);
  EXPECT_EQ(res.gradients.at("v"), Tensor::vector({1, 0}));
}

TEST(Gradient, TieBreakLowestFlatIndex) {
  GraphBuilder b;
  auto v = b.parameter("v", {4});
  auto mn = b.group_min(v, {{3, 1, 2}});
  auto g = b.build(b.mean(mn));
  auto res = value_and_gradient(g, {{"v", Tensor::vector({0, 5, 5, 5})}});
  EXPECT_EQ(res.evaluation.selection(mn)->chosen[0], 1u);
  EXPECT_EQ(res.gradients.at("v"), Tensor::vector({0, 1, 0, 0}));
  EXPECT_EQ(res.evaluation.selection_margin(), 0.0);
}

TEST(Gradient, NonScalarLossRejected) {
  GraphBuilder b;
  auto x = b.parameter("x", {2});
  auto g = b.build(b.tanh(x));
  EXPECT_THROW(gradient(g, {{"x", Tensor::vector({1, 2})}}), ShapeError);
}

TEST(Gradient, StopGradientBlocks) {
  GraphBuilder b;
  auto x = b.parameter("x", {2});
  auto y = b.parameter("y", {2});
  auto g = b.build(b.gram(b.stop_gradient(x), y));
  auto grads = gradient(g, {{"x", Tensor::vector({1, 2})}, {"y", Tensor::vector({3, 4})}});
  EXPECT_EQ(grads.at("x"), Tensor::vector({0, 0}));
  EXPECT_EQ(grads.at("y"), Tensor::vector({1, 2}));
}

// Every primitive, one composite per op, checked against central differences.
TEST(Gradient, PrimitivesMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    GraphBuilder b;
    auto x = b.input("x", {5, 3});
    auto w1 = b.parameter("W1", {4, 3});
    auto b1 = b.parameter("b1", {4});
    auto w2 = b.parameter("W2", {4, 4});
    auto b2 = b.parameter("b2", {4});
    auto c = b.parameter("c", {5, 4});
    auto h = b.tanh(b.affine(x, w1, b1));
    auto a2 = b.affine(h, w2, b2);
    auto mixed = b.add(b.mul(a2, c), b.sub(b.scale(h, 0.5), c));
    auto z = b.l2_normalize(mixed);
    auto gm = b.gram(z, z);
    auto mn = b.group_min(gm, {{1, 2, 3}, {6, 8, 9}});
    auto mx = b.group_max(gm, {{11, 13, 14}, {4, 22}});
    auto av = b.group_mean(gm, {{0, 7}, {5, 10, 15}});
    auto lse = b.group_logsumexp(gm, {{1, 2, 3, 4}, {20, 21, 23, 24}}, 1.7);
    auto terms = b.add(b.add(mn, mx), b.sub(av, lse));
    auto total = b.add(b.mean(terms), b.scale(b.squared_norm(c), 0.01));
    auto graph = b.build(total);

    TensorMap bind{{"x", random_tensor({5, 3}, rng)},   {"W1", random_tensor({4, 3}, rng)},
                   {"b1", random_tensor({4}, rng)},     {"W2", random_tensor({4, 4}, rng)},
                   {"b2", random_tensor({4}, rng)},     {"c", random_tensor({5, 4}, rng)}};
    auto res = value_and_gradient(graph, bind, total);
    if (res.evaluation.selection_margin() < 1e-6) continue;
    auto fd = oracle::finite_difference_gradient(graph, bind, total);
    EXPECT_LT(oracle::relative_error(res.gradients, fd), 1e-5) << "seed " << seed;
  }
}

TEST(Gradient, ReluAwayFromKink) {
  Rng rng(3);
  GraphBuilder b;
  auto w = b.parameter("w", {6});
  auto graph = b.build(b.squared_norm(b.relu(w)));
  Tensor v = random_tensor({6}, rng);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) < 1e-3) v[i] = 0.5;
  }
  TensorMap bind{{"w", v}};
  auto g = gradient(graph, bind);
  auto fd = oracle::finite_difference_gradient(graph, bind, graph.output());
  EXPECT_LT(oracle::relative_error(g, fd), 1e-5);
}

TEST(Gradient, Deterministic) {
  Rng rng(5);
  GraphBuilder b;
  auto x = b.input("x", {8, 3});
  auto w = b.parameter("W", {2, 3});
  auto bias = b.parameter("b", {2});
  auto z = b.l2_normalize(b.tanh(b.affine(x, w, bias)));
  auto gm = b.gram(z, z);
  auto graph = b.build(b.mean(b.group_logsumexp(gm, {{1, 2, 3}, {9, 10}}, 2.0)));
  TensorMap bind{{"x", random_tensor({8, 3}, rng)}, {"W", random_tensor({2, 3}, rng)}, {"b", random_tensor({2}, rng)}};
  auto a = value_and_gradient(graph, bind);
  auto c = value_and_gradient(graph, bind);
  EXPECT_EQ(a.loss, c.loss);
  EXPECT_EQ(a.gradients, c.gradients);
}

TEST(Linalg, CholeskySolve) {
  Tensor s = Tensor::matrix({{4, 1}, {1, 3}});
  Tensor rhs = Tensor::matrix({{1}, {2}});
  Tensor x;
  ASSERT_TRUE(linalg::cholesky_solve(s, rhs, x));
  EXPECT_NEAR(x[0], 1.0 / 11.0, 1e-14);
  EXPECT_NEAR(x[1], 7.0 / 11.0, 1e-14);
  Tensor singular = Tensor::matrix({{1, 1}, {1, 1}});
  EXPECT_FALSE(linalg::cholesky_solve(singular, rhs, x));
}

TEST(Linalg, SingularValues) {
  auto sv = linalg::singular_values(Tensor::matrix({{3, 0}, {0, -4}, {0, 0}}));
  ASSERT_EQ(sv.size(), 2u);
  EXPECT_NEAR(sv[0], 4.0, 1e-12);
  EXPECT_NEAR(sv[1], 3.0, 1e-12);
  // rank-one matrix
  auto r1 = linalg::singular_values(Tensor::matrix({{1, 2}, {2, 4}}));
  EXPECT_NEAR(r1[0], 5.0, 1e-12);
  EXPECT_NEAR(r1[1], 0.0, 1e-7);
}

TEST(Rng, Reproducible) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
  EXPECT_NE(derive_seed(1, "train"), derive_seed(1, "data"));
}

TEST(Rng, TruncatedNormalStaysInRange) {
  Rng rng(9);
  for (int i = 0; i < 100000; ++i) {
    double v = rng.truncated_normal(0.0, 1.0, -0.5, 2.0);
    ASSERT_GE(v, -0.5);
    ASSERT_LE(v, 2.0);
  }
}
