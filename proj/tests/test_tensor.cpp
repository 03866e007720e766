#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bicameral/gradcheck.hpp"
#include "bicameral/optim.hpp"
#include "bicameral/tensor.hpp"

using namespace bicameral;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, bool grad = true) {
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<double> v(numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), grad);
}

}  // namespace

TEST(Matmul, IdentityAndZero) {
  auto eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  auto b = Tensor::from({2, 2}, {3, 4, 5, 6});
  auto c = matmul(eye, b);
  EXPECT_EQ(std::vector<double>(c.data().begin(), c.data().end()),
            (std::vector<double>{3, 4, 5, 6}));

  auto z = matmul(Tensor::from({1, 2}, {1, 2}), Tensor::from({2, 1}, {0, 0}));
  EXPECT_EQ(z.shape(), (Shape{1, 1}));
  EXPECT_EQ(z.item(), 0.0);
}

TEST(Matmul, ShapeErrorNamesBothShapes) {
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({4, 2});
  try {
    matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos);
    EXPECT_NE(msg.find("[4x2]"), std::string::npos);
  }
}

TEST(Matmul, SumGradientEqualsRowSumsOfB) {
  std::mt19937_64 rng(11);
  auto a = random_tensor({3, 4}, rng);
  auto b = random_tensor({4, 2}, rng);
  sum(matmul(a, b)).backward();
  const auto ga = a.grad();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t r = 0; r < 4; ++r)
      EXPECT_NEAR(ga[i * 4 + r], b.at(r, 0) + b.at(r, 1), 1e-14);

  // Central differences, step 1e-5, relative tolerance 1e-6.
  GradcheckOptions opts;
  opts.rel_tol = 1e-6;
  auto res = gradcheck("matmul-sum", [&] { return sum(matmul(a, b)); }, {a, b}, opts);
  EXPECT_TRUE(res.passed) << res.max_rel_error;
}

TEST(Softmax, UniformAndStable) {
  auto s = softmax(Tensor::from({3}, {0, 0, 0}), 0);
  for (double v : s.data()) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);

  auto big = softmax(Tensor::from({2}, {1000, 0}), 0);
  EXPECT_NEAR(big.at(0), 1.0, 1e-12);
  EXPECT_NEAR(big.at(1), 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(big.at(1)));
}

TEST(Softmax, MatchesHighPrecisionValues) {
  // exp(k) / sum exp, evaluated at 40 significant digits.
  auto s = softmax(Tensor::from({3}, {1, 2, 3}), 0);
  EXPECT_NEAR(s.at(0), 0.090030573170380457998, 1e-15);
  EXPECT_NEAR(s.at(1), 0.24472847105479765247, 1e-15);
  EXPECT_NEAR(s.at(2), 0.66524095577482188953, 1e-15);
}

TEST(Softmax, RowsSumToOneAlongEveryAxis) {
  std::mt19937_64 rng(3);
  auto x = random_tensor({3, 4, 5}, rng, false);
  for (auto& v : x.mutable_data()) v *= 20.0;
  for (std::size_t axis = 0; axis < 3; ++axis) {
    auto s = softmax(x, axis);
    const auto& sh = x.shape();
    std::size_t inner = 1;
    for (std::size_t k = axis + 1; k < 3; ++k) inner *= sh[k];
    const std::size_t outer = x.size() / (inner * sh[axis]);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t q = 0; q < inner; ++q) {
        double total = 0.0;
        for (std::size_t j = 0; j < sh[axis]; ++j) {
          const double v = s.at(o * sh[axis] * inner + j * inner + q);
          EXPECT_GE(v, 0.0);
          EXPECT_LE(v, 1.0);
          total += v;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
      }
  }
  EXPECT_THROW(softmax(x, 3), ShapeError);
}

TEST(LayerNorm, ConstantRowMapsToZero) {
  auto y = layer_norm(Tensor::from({1, 3}, {5, 5, 5}), Tensor::full({3}, 1.0),
                      Tensor::zeros({3}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, TwoElementRow) {
  const double eps = 1e-5;
  auto y = layer_norm(Tensor::from({1, 2}, {1, -1}), Tensor::full({2}, 1.0), Tensor::zeros({2}),
                      eps);
  const double f = 1.0 / std::sqrt(1.0 + eps);
  EXPECT_NEAR(y.at(0, 0), f, 1e-15);
  EXPECT_NEAR(y.at(0, 1), -f, 1e-15);
}

TEST(LayerNorm, RandomRowStatistics) {
  std::mt19937_64 rng(5);
  auto x = random_tensor({4, 16}, rng, false);
  // Tiny eps so the pre-affine variance is 1 to within 1e-6.
  auto y = layer_norm(x, Tensor::full({16}, 1.0), Tensor::zeros({16}), 1e-12);
  for (std::size_t r = 0; r < 4; ++r) {
    double mu = 0.0, var = 0.0;
    for (std::size_t j = 0; j < 16; ++j) mu += y.at(r, j);
    mu /= 16;
    for (std::size_t j = 0; j < 16; ++j) var += (y.at(r, j) - mu) * (y.at(r, j) - mu);
    var /= 16;
    EXPECT_LT(std::abs(mu), 1e-12);
    EXPECT_LT(std::abs(var - 1.0), 1e-6);
  }
}

TEST(ConcatLast, BasicEmptyAndMismatch) {
  auto c = concat_last(Tensor::from({1, 1}, {1}), Tensor::from({1, 2}, {2, 3}));
  EXPECT_EQ(c.shape(), (Shape{1, 3}));
  EXPECT_EQ(std::vector<double>(c.data().begin(), c.data().end()), (std::vector<double>{1, 2, 3}));

  auto a = Tensor::from({2, 2}, {1, 2, 3, 4});
  auto same = concat_last(a, Tensor::zeros({2, 0}));
  EXPECT_EQ(same.shape(), a.shape());
  EXPECT_EQ(std::vector<double>(same.data().begin(), same.data().end()),
            std::vector<double>(a.data().begin(), a.data().end()));

  EXPECT_THROW(concat_last(Tensor::zeros({2, 2}), Tensor::zeros({3, 2})), ShapeError);
}

TEST(CrossEntropy, UniformOneHotAndRandom) {
  const std::vector<std::int64_t> t1{2};
  EXPECT_NEAR(cross_entropy(Tensor::zeros({1, 4}), t1).item(), 1.3862943611198906188, 1e-15);

  auto peaked = Tensor::zeros({1, 4});
  peaked.mutable_data()[2] = 1000.0;
  EXPECT_NEAR(cross_entropy(peaked, t1).item(), 0.0, 1e-12);

  std::mt19937_64 rng(9);
  auto logits = random_tensor({5, 7}, rng, false);
  const std::vector<std::int64_t> targets{0, 6, 3, 3, 1};
  long double expected = 0.0L;
  for (std::size_t r = 0; r < 5; ++r) {
    long double z = 0.0L;
    for (std::size_t j = 0; j < 7; ++j) z += std::exp(static_cast<long double>(logits.at(r, j)));
    expected += -(static_cast<long double>(logits.at(r, targets[r])) - std::log(z));
  }
  expected /= 5;
  EXPECT_NEAR(cross_entropy(logits, targets).item(), static_cast<double>(expected), 1e-13);

  const std::vector<std::int64_t> bad{0, 7, 0, 0, 0};
  EXPECT_THROW(cross_entropy(logits, bad), std::out_of_range);
}

TEST(BinaryCrossEntropy, KnownValuesAndRandom) {
  EXPECT_NEAR(binary_cross_entropy(Tensor::from({1}, {0.5}), Tensor::from({1}, {0.5})).item(),
              0.69314718055994530942, 1e-15);
  EXPECT_NEAR(binary_cross_entropy(Tensor::from({1}, {1.0}), Tensor::from({1}, {1.0})).item(), 0.0,
              1e-6);
  // Clamping keeps p = 0 finite.
  EXPECT_TRUE(std::isfinite(
      binary_cross_entropy(Tensor::from({1}, {0.0}), Tensor::from({1}, {1.0})).item()));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.01, 0.99);
  std::vector<double> p(12), y(12);
  long double expected = 0.0L;
  for (std::size_t i = 0; i < 12; ++i) {
    p[i] = unit(rng);
    y[i] = unit(rng);
    expected -= y[i] * std::log(static_cast<long double>(p[i])) +
                (1 - y[i]) * std::log(1.0L - p[i]);
  }
  expected /= 12;
  EXPECT_NEAR(binary_cross_entropy(Tensor::from({3, 4}, p), Tensor::from({3, 4}, y)).item(),
              static_cast<double>(expected), 1e-13);
}

TEST(Gradcheck, EveryOperationMatchesFiniteDifferences) {
  for (const auto& r : gradcheck_all_ops(2024)) {
    EXPECT_TRUE(r.passed) << r.name << " rel err " << r.max_rel_error;
    EXPECT_GT(r.checked, 0u) << r.name;
  }
}

TEST(Gradcheck, SeveralSeeds) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const auto& r : gradcheck_all_ops(seed)) {
      EXPECT_TRUE(r.passed) << r.name << " seed " << seed << " rel err " << r.max_rel_error;
    }
  }
}

TEST(Backward, SecondCallThrows) {
  auto x = Tensor::from({2}, {1.0, 2.0}, true);
  auto loss = sum(mul(x, x));
  loss.backward();
  EXPECT_EQ(x.grad(), (std::vector<double>{2.0, 4.0}));
  EXPECT_THROW(loss.backward(), std::logic_error);
}

TEST(Backward, VisitsEachNodeOnce) {
  // Diamond: x feeds two branches that rejoin.
  auto x = Tensor::from({3}, {0.5, -1.0, 2.0}, true);
  auto a = scale(x, 2.0);          // node 2
  auto b = mul(x, x);              // node 3
  auto c = add(a, b);              // node 4
  auto d = add(c, a);              // node 5 (a reused)
  auto loss = sum(d);              // node 6
  loss.backward();
  EXPECT_EQ(last_backward_visit_count(), 6u);
  // d = 4x + x^2, so dd/dx = 4 + 2x.
  const auto g = x.grad();
  EXPECT_DOUBLE_EQ(g[0], 5.0);
  EXPECT_DOUBLE_EQ(g[1], 2.0);
  EXPECT_DOUBLE_EQ(g[2], 8.0);
}

TEST(Backward, NoGraphWithoutGradInputs) {
  auto x = Tensor::from({2}, {1.0, 2.0});
  auto y = sum(mul(x, x));
  EXPECT_FALSE(y.requires_grad());
  EXPECT_THROW(y.backward(), std::logic_error);
}

TEST(Determinism, ForwardIsBitwiseRepeatable) {
  std::mt19937_64 rng(8);
  auto a = random_tensor({6, 5}, rng, false);
  auto b = random_tensor({5, 4}, rng, false);
  auto g = Tensor::full({4}, 1.0);
  auto z = Tensor::zeros({4});
  auto f = [&] { return softmax(layer_norm(gelu(matmul(a, b)), g, z), 1); };
  auto y1 = f(), y2 = f();
  for (std::size_t i = 0; i < y1.size(); ++i) EXPECT_EQ(y1.at(i), y2.at(i));
}

TEST(Shapes, ReshapeTransposeEmbedding) {
  auto x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  auto t = transpose(x);
  EXPECT_EQ(t.shape(), (Shape{3, 2}));
  EXPECT_EQ(t.at(2, 1), 6.0);
  EXPECT_THROW(reshape(x, {4, 2}), ShapeError);
  EXPECT_EQ(reshape(x, {3, 2}).at(1, 0), 3.0);

  const std::vector<std::int64_t> ids{1, 1, 0};
  auto e = embedding_lookup(x, ids);
  EXPECT_EQ(e.shape(), (Shape{3, 3}));
  EXPECT_EQ(e.at(1, 2), 6.0);
  const std::vector<std::int64_t> bad{2};
  EXPECT_THROW(embedding_lookup(x, bad), std::out_of_range);
}

TEST(MaskedFill, CausalMaskBlocksGradient) {
  auto x = Tensor::from({2, 2}, {1, 2, 3, 4}, true);
  auto m = causal_mask(2);
  EXPECT_EQ(m, (std::vector<std::uint8_t>{0, 1, 0, 0}));
  auto y = masked_fill(x, m, -7.0);
  EXPECT_EQ(y.at(0, 1), -7.0);
  sum(y).backward();
  EXPECT_EQ(x.grad(), (std::vector<double>{1, 0, 1, 1}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr * g / (|g| + eps').
  auto w = Tensor::from({2}, {1.0, -1.0}, true);
  Adam opt({w}, AdamConfig{0.1, 0.9, 0.999, 1e-8});
  sum(mul(w, Tensor::from({2}, {3.0, -0.5}))).backward();
  opt.step();
  EXPECT_NEAR(w.at(0), 0.9, 1e-7);
  EXPECT_NEAR(w.at(1), -0.9, 1e-7);
  EXPECT_EQ(opt.state().step, 1);
}

TEST(Adam, MinimizesQuadratic) {
  auto w = Tensor::from({3}, {2.0, -3.0, 0.5}, true);
  Adam opt({w}, AdamConfig{0.05});
  for (int i = 0; i < 2000; ++i) {
    opt.zero_grad();
    sum(mul(w, w)).backward();
    opt.step();
  }
  for (double v : w.data()) EXPECT_NEAR(v, 0.0, 1e-3);
}
