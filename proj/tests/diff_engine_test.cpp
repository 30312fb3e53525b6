#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "fairtab/nn_ops.hpp"
#include "fairtab/random.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace fairtab {
namespace {

using testing::gradient_error;

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(r, c);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

// Random-weighted sum so no gradient is trivially constant.
Tensor weighted_sum(const Tensor& t, const Tensor& weights) { return sum(mul(t, weights)); }

template <typename Fn>
void expect_error(ErrorKind kind, Fn&& fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

TEST(Matmul, IdentityAndDotProduct) {
  Tensor id = Tensor::from_rows({{1, 0}, {0, 1}});
  Tensor b = Tensor::from_rows({{3, 4}, {5, 6}});
  Tensor c = matmul(id, b);
  EXPECT_EQ(std::vector<double>(c.data().begin(), c.data().end()),
            (std::vector<double>{3, 4, 5, 6}));
  EXPECT_EQ(matmul(Tensor::from_rows({{1, 2}}), Tensor::from_rows({{3}, {4}})).item(), 11.0);
}

TEST(Matmul, ShapeMismatch) {
  expect_error(ErrorKind::kShape, [] { matmul(Tensor(2, 3), Tensor(2, 3)); });
}

TEST(Matmul, GradientOfSumIsOnesTimesBTransposed) {
  Tensor a = Tensor::from_rows({{1, 2, 3}, {4, 5, 6}}).set_requires_grad();
  Tensor b = Tensor::from_rows({{1, -1}, {2, 0.5}, {-3, 2}});
  Tape tape;
  tape.backward(sum(matmul(a, b)));
  // ones(2x2) * b^T: every row equals the row sums of b.
  const double expected[3] = {0.0, 2.5, -1.0};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(a.grad()[i * 3 + j], expected[j]);
}

TEST(Matmul, FiniteDifferences) {
  Rng rng(3);
  Tensor a = random_tensor(3, 4, rng), b = random_tensor(4, 2, rng), w = random_tensor(3, 2, rng);
  auto loss = [&] { return weighted_sum(matmul(a, b), w); };
  EXPECT_LE(gradient_error(loss, a), 1e-4);
  EXPECT_LE(gradient_error(loss, b), 1e-4);
}

TEST(Elementwise, ForwardValues) {
  Tensor x = Tensor::from_rows({{-1, 0, 2}});
  Tensor r = elementwise(OpKind::kRelu, x);
  EXPECT_EQ(std::vector<double>(r.data().begin(), r.data().end()), (std::vector<double>{0, 0, 2}));
  EXPECT_DOUBLE_EQ(elementwise(OpKind::kSigmoid, Tensor::scalar(0.0)).item(), 0.5);
  EXPECT_DOUBLE_EQ(elementwise(OpKind::kScale, Tensor::scalar(3.0), Tensor::scalar(2.0)).item(), 6.0);
  EXPECT_DOUBLE_EQ(elementwise(OpKind::kExp, Tensor::scalar(0.0)).item(), 1.0);
}

TEST(Elementwise, Errors) {
  expect_error(ErrorKind::kDomain, [] { fairtab::log(Tensor::from_rows({{1.0, 0.0}})); });
  expect_error(ErrorKind::kDomain, [] { fairtab::log(Tensor::scalar(-2.0)); });
  expect_error(ErrorKind::kShape, [] { add(Tensor(2, 3), Tensor(3, 2)); });
  expect_error(ErrorKind::kShape, [] { elementwise(OpKind::kMul, Tensor(2, 2)); });
}

TEST(Elementwise, BroadcastForms) {
  Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
  Tensor row = add(a, Tensor::from_rows({{10, 20}}));
  EXPECT_EQ(row.at(1, 1), 24.0);
  Tensor scalar = mul(a, Tensor::scalar(2.0));
  EXPECT_EQ(scalar.at(1, 0), 6.0);
}

TEST(Elementwise, FiniteDifferencesPerKind) {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor a = random_tensor(3, 4, rng), b = random_tensor(3, 4, rng);
    Tensor positive = random_tensor(3, 4, rng, 0.5, 2.0);
    Tensor row = random_tensor(1, 4, rng), w = random_tensor(3, 4, rng);
    EXPECT_LE(gradient_error([&] { return weighted_sum(mul(a, b), w); }, a), 1e-4);
    EXPECT_LE(gradient_error([&] { return weighted_sum(mul(a, row), w); }, row), 1e-4);
    EXPECT_LE(gradient_error([&] { return weighted_sum(add(a, row), w); }, row), 1e-4);
    EXPECT_LE(gradient_error([&] { return weighted_sum(sub(a, b), w); }, b), 1e-4);
    EXPECT_LE(gradient_error([&] { return weighted_sum(relu(a), w); }, a), 1e-4);
    EXPECT_LE(gradient_error([&] { return weighted_sum(sigmoid(a), w); }, a), 1e-4);
    EXPECT_LE(gradient_error([&] { return weighted_sum(fairtab::exp(a), w); }, a), 1e-4);
    EXPECT_LE(gradient_error([&] { return weighted_sum(fairtab::log(positive), w); }, positive), 1e-4);
    EXPECT_LE(gradient_error([&] { return weighted_sum(scale(a, -1.7), w); }, a), 1e-4);
    EXPECT_LE(gradient_error([&] { return weighted_sum(transpose(transpose(a)), w); }, a), 1e-4);
    EXPECT_LE(gradient_error([&] { return sum(mul(row_sum(a), slice_cols(w, 0, 1))); }, a), 1e-4);
  }
}

TEST(Tape, DiamondAccumulatesBothBranches) {
  Rng rng(5);
  Tensor x = random_tensor(2, 3, rng);
  Tensor w = random_tensor(2, 3, rng);
  // x feeds two consumers whose results are recombined.
  auto loss = [&] { return weighted_sum(add(mul(x, x), sigmoid(x)), w); };
  EXPECT_LE(gradient_error(loss, x), 1e-4);

  x.set_requires_grad();
  Tape tape;
  tape.backward(weighted_sum(add(mul(x, x), sigmoid(x)), w));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-x.data()[i]));
    EXPECT_NEAR(x.grad()[i], w.data()[i] * (2.0 * x.data()[i] + s * (1.0 - s)), 1e-12);
  }
}

TEST(Tape, VisitsEachRecordedNodeOnce) {
  Tensor x = Tensor::from_rows({{1.0, 2.0}}).set_requires_grad();
  Tape tape;
  Tensor y = add(x, x);
  Tensor z = sum(mul(y, y));
  EXPECT_EQ(tape.size(), 3u);
  EXPECT_EQ(tape.backward(z), 3u);
  EXPECT_DOUBLE_EQ(x.grad()[0], 8.0);  // d/dx (2x)^2 = 8x
}

TEST(Tape, NoRecordingWithoutActiveTape) {
  Tensor x = Tensor::from_rows({{1.0}}).set_requires_grad();
  Tensor y = mul(x, x);
  EXPECT_FALSE(y.requires_grad());
}

TEST(Sparsemax, WorkedExamples) {
  auto row = [](std::vector<double> z) {
    Tensor out = sparsemax(Tensor(1, z.size(), z));
    return std::vector<double>(out.data().begin(), out.data().end());
  };
  EXPECT_EQ(row({0.0, 0.0}), (std::vector<double>{0.5, 0.5}));
  auto a = row({0.5, -0.5});
  EXPECT_DOUBLE_EQ(a[0], 1.0);
  EXPECT_DOUBLE_EQ(a[1], 0.0);
  auto b = row({0.2, 0.0});
  EXPECT_NEAR(b[0], 0.6, 1e-15);
  EXPECT_NEAR(b[1], 0.4, 1e-15);
}

TEST(Sparsemax, ThresholdMatchesWorkedValues) {
  std::vector<double> out(2);
  EXPECT_DOUBLE_EQ(sparsemax_row(std::vector<double>{0.5, -0.5}, out), -0.5);
  EXPECT_NEAR(sparsemax_row(std::vector<double>{0.2, 0.0}, out), -0.4, 1e-15);
}

TEST(Sparsemax, HugeLogitsStayOnSimplex) {
  Tensor p = sparsemax(Tensor::from_rows({{1e150, 3e149, -1e150}, {1e17, 1e17 + 64.0, 0.0}}));
  EXPECT_EQ(p.at(0, 0), 1.0);
  EXPECT_EQ(p.at(0, 1), 0.0);
  EXPECT_EQ(p.at(0, 2), 0.0);
  EXPECT_EQ(p.at(1, 0), 0.0);
  EXPECT_EQ(p.at(1, 1), 1.0);
}

TEST(Sparsemax, RejectsNonFinite) {
  expect_error(ErrorKind::kDomain, [] { sparsemax(Tensor::from_rows({{1.0, NAN}})); });
  expect_error(ErrorKind::kDomain, [] { sparsemax(Tensor::from_rows({{INFINITY, 0.0}})); });
}

TEST(Sparsemax, MatchesEnumerationAndInvariants) {
  Rng rng(17);
  std::uniform_int_distribution<int> width(1, 6);
  std::normal_distribution<double> normal(0.0, 1.5);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = width(rng);
    std::vector<double> z(n);
    for (double& v : z) v = normal(rng);
    Tensor p = sparsemax(Tensor(1, n, z));
    auto expected = testing::sparsemax_by_enumeration(z);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      EXPECT_NEAR(p.data()[i], expected[i], 1e-8);
      EXPECT_GE(p.data()[i], 0.0);
      total += p.data()[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-9);

    const double c = normal(rng) * 10.0;
    std::vector<double> shifted = z;
    for (double& v : shifted) v += c;
    Tensor q = sparsemax(Tensor(1, n, shifted));
    for (int i = 0; i < n; ++i) EXPECT_NEAR(q.data()[i], p.data()[i], 1e-9);

    const auto argmax = std::max_element(z.begin(), z.end()) - z.begin();
    EXPECT_EQ(p.data()[argmax], *std::max_element(p.data().begin(), p.data().end()));
  }
}

TEST(Sparsemax, FiniteDifferences) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor z = random_tensor(4, 5, rng, -1.5, 1.5), w = random_tensor(4, 5, rng);
    EXPECT_LE(gradient_error([&] { return weighted_sum(sparsemax(z), w); }, z), 1e-4);
  }
}

TEST(BatchNorm, ConstantColumnNormalizesToZero) {
  BatchNormState state(2);
  Tensor x = Tensor::from_rows({{3.0, 1.0}, {3.0, 2.0}, {3.0, 6.0}});
  Tensor y = batch_norm(x, Tensor(1, 2, 1.0), Tensor(1, 2, 0.0), state, Mode::kTrain);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(y.at(i, 0), 0.0);
}

TEST(BatchNorm, TrainModeStandardizesColumns) {
  Rng rng(29);
  Tensor x = random_tensor(16, 3, rng, -20.0, 30.0);
  BatchNormState state(3);
  Tensor y = batch_norm(x, Tensor(1, 3, 1.0), Tensor(1, 3, 0.0), state, Mode::kTrain);
  for (std::size_t j = 0; j < 3; ++j) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < 16; ++i) m += y.at(i, j) / 16.0;
    for (std::size_t i = 0; i < 16; ++i) v += (y.at(i, j) - m) * (y.at(i, j) - m) / 16.0;
    EXPECT_NEAR(m, 0.0, 1e-6);
    EXPECT_NEAR(v, 1.0, 1e-6);
  }
}

TEST(BatchNorm, RunningStatsAndEvalMode) {
  BatchNormState state(1);
  Tensor x = Tensor::from_rows({{1.0}, {3.0}});
  batch_norm(x, Tensor(1, 1, 1.0), Tensor(1, 1, 0.0), state, Mode::kTrain);
  EXPECT_DOUBLE_EQ(state.running_mean.item(), 0.1 * 2.0);
  EXPECT_DOUBLE_EQ(state.running_var.item(), 0.9 * 1.0 + 0.1 * 2.0);
  Tensor y = batch_norm(Tensor::scalar(0.2), Tensor(1, 1, 2.0), Tensor(1, 1, 0.5), state,
                        Mode::kEval);
  EXPECT_DOUBLE_EQ(y.item(), 0.5);
  // A single row is fine in eval mode and rejected in train mode.
  expect_error(ErrorKind::kBatchSize, [&] {
    batch_norm(Tensor::scalar(1.0), Tensor(1, 1, 1.0), Tensor(1, 1, 0.0), state, Mode::kTrain);
  });
}

TEST(BatchNorm, FiniteDifferences) {
  Rng rng(31);
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    Tensor x = random_tensor(6, 3, rng, -2.0, 2.0), w = random_tensor(6, 3, rng);
    Tensor gamma = random_tensor(1, 3, rng, 0.5, 1.5), beta = random_tensor(1, 3, rng);
    BatchNormState state(3);
    state.running_var = Tensor(1, 3, 0.7);
    auto loss = [&] { return weighted_sum(batch_norm(x, gamma, beta, state, mode), w); };
    EXPECT_LE(gradient_error(loss, x), 1e-4);
    EXPECT_LE(gradient_error(loss, gamma), 1e-4);
    EXPECT_LE(gradient_error(loss, beta), 1e-4);
  }
}

TEST(Losses, WorkedValues) {
  std::vector<int> one{1};
  EXPECT_NEAR(binary_cross_entropy(Tensor::scalar(0.0), one).item(), std::log(2.0), 1e-15);
  EXPECT_EQ(frobenius_sq(Tensor::from_rows({{0, 0}, {0, 0}})).item(), 0.0);
  EXPECT_EQ(frobenius_sq(Tensor::from_rows({{0, 1}, {1, 0}})).item(), 2.0);
  std::vector<int> cls{2};
  EXPECT_NEAR(categorical_cross_entropy(Tensor::from_rows({{0, 0, 0}}), cls).item(),
              std::log(3.0), 1e-15);
}

TEST(Losses, StableForLargeLogits) {
  std::vector<int> y{0, 1};
  const double v = binary_cross_entropy(Tensor::from_rows({{800.0}, {-800.0}}), y).item();
  EXPECT_NEAR(v, 800.0, 1e-9);
  std::vector<int> c{0};
  EXPECT_NEAR(categorical_cross_entropy(Tensor::from_rows({{-900.0, 900.0}}), c).item(), 1800.0, 1e-9);
}

TEST(Losses, LabelErrors) {
  std::vector<int> bad{2};
  expect_error(ErrorKind::kLabel, [&] { binary_cross_entropy(Tensor::scalar(0.0), bad); });
  std::vector<int> out_of_range{3};
  expect_error(ErrorKind::kLabel,
               [&] { categorical_cross_entropy(Tensor::from_rows({{0, 0, 0}}), out_of_range); });
  std::vector<int> negative{-1};
  expect_error(ErrorKind::kLabel,
               [&] { categorical_cross_entropy(Tensor::from_rows({{0, 0}}), negative); });
}

TEST(Losses, FiniteDifferences) {
  Rng rng(37);
  Tensor logits = random_tensor(5, 1, rng, -3.0, 3.0);
  std::vector<int> y{0, 1, 1, 0, 1};
  EXPECT_LE(gradient_error([&] { return binary_cross_entropy(logits, y); }, logits), 1e-4);
  Tensor multi = random_tensor(5, 4, rng, -3.0, 3.0);
  std::vector<int> c{0, 3, 2, 1, 3};
  EXPECT_LE(gradient_error([&] { return categorical_cross_entropy(multi, c); }, multi), 1e-4);
  Tensor m = random_tensor(3, 3, rng);
  EXPECT_LE(gradient_error([&] { return frobenius_sq(m); }, m), 1e-4);
}

}  // namespace
}  // namespace fairtab
