#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fairtab/fair_tabnet.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

namespace fairtab {
namespace {

using testing::expect_error;
using testing::gradient_error;

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(r, c);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

TabNetConfig small_backbone() {
  TabNetConfig cfg;
  cfg.n_p = 4;
  cfg.n_a = 4;
  cfg.n_steps = 2;
  return cfg;
}

TEST(DiffLoss, WorkedValues) {
  EXPECT_EQ(diff_loss(Tensor::from_rows({{1, 0}}), Tensor::from_rows({{0, 1}})).item(),
            0.0 + 1.0);  // r_p^T r_s = [[0, 1], [0, 0]]
  EXPECT_EQ(diff_loss(Tensor::from_rows({{1}, {0}}), Tensor::from_rows({{0}, {1}})).item(), 0.0);
  EXPECT_EQ(diff_loss(Tensor::from_rows({{1}, {1}}), Tensor::from_rows({{1}, {0}})).item(), 1.0);
  EXPECT_EQ(diff_loss(Tensor::from_rows({{1, 1}}), Tensor::from_rows({{1}})).item(), 2.0);
  expect_error(ErrorKind::kShape,
               [] { diff_loss(Tensor::from_rows({{1}, {1}}), Tensor::from_rows({{1}})); });
}

TEST(DiffLoss, RowPermutationInvarianceAndScaling) {
  Rng rng(21);
  Tensor r_p = random_tensor(7, 3, rng), r_s = random_tensor(7, 5, rng);
  const double base = diff_loss(r_p, r_s).item();
  EXPECT_GE(base, 0.0);

  std::vector<std::size_t> perm{3, 0, 6, 1, 5, 2, 4};
  Tensor pp(7, 3), ps(7, 5);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 3; ++j) pp.at(i, j) = r_p.at(perm[i], j);
    for (std::size_t j = 0; j < 5; ++j) ps.at(i, j) = r_s.at(perm[i], j);
  }
  EXPECT_NEAR(diff_loss(pp, ps).item(), base, 1e-12 * base);
  EXPECT_NEAR(diff_loss(scale(r_p, 2.0), scale(r_s, -3.0)).item(), 36.0 * base, 1e-12 * base);
}

TEST(DiffLoss, FiniteDifferences) {
  Rng rng(22);
  Tensor r_p = random_tensor(6, 3, rng), r_s = random_tensor(6, 4, rng);
  r_p.set_requires_grad();
  r_s.set_requires_grad();
  auto loss = [&] { return diff_loss(r_p, r_s); };
  EXPECT_LE(gradient_error(loss, r_p), 1e-4);
  EXPECT_LE(gradient_error(loss, r_s), 1e-4);
}

TEST(TotalLoss, Weighting) {
  FairConfig off;
  off.lambda_d = off.lambda_s = 0.0;
  Tensor pred = Tensor::scalar(0.6931), sens = Tensor::scalar(1.38), diff = Tensor::scalar(42.0);
  EXPECT_EQ(total_loss(pred, sens, diff, off).item(), 0.6931);

  FairConfig weighted;
  weighted.lambda_d = 0.5;
  weighted.lambda_s = 0.1;
  EXPECT_NEAR(total_loss(Tensor::scalar(1), Tensor::scalar(2), Tensor::scalar(3), weighted).item(),
              2.3, 1e-15);
}

TEST(TotalLoss, NonFiniteComponentNamed) {
  FairConfig cfg;
  try {
    total_loss(Tensor::scalar(1.0), Tensor::scalar(NAN), Tensor::scalar(0.0), cfg);
    ADD_FAILURE() << "expected numeric error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
    EXPECT_NE(std::string(e.what()).find("L_sens"), std::string::npos);
  }
}

TEST(FairConfig, RejectsNegativeWeights) {
  FairConfig cfg;
  cfg.lambda_s = -0.1;
  expect_error(ErrorKind::kConfig, [&] { cfg.validate(); });
  cfg = FairConfig{};
  cfg.lambda_d = INFINITY;
  expect_error(ErrorKind::kConfig, [&] { cfg.validate(); });
  expect_error(ErrorKind::kConfig, [] { parse_model_kind("xgboost"); });
}

TEST(SensitiveBranch, DefaultShapes) {
  Rng rng(23);
  Model model(ModelKind::kFairTabNet, 9, TabNetConfig{}, FairConfig{}, 1);
  auto fwd = model.forward(random_tensor(10, 9, rng), Mode::kTrain);
  ASSERT_TRUE(fwd.r_s.has_value());
  EXPECT_EQ(fwd.r_s->rows(), 10u);
  EXPECT_EQ(fwd.r_s->cols(), 16u);
  EXPECT_EQ(fwd.sensitive_logits->cols(), 4u);

  FairConfig binary;
  binary.n_sensitive_classes = 2;
  Model two(ModelKind::kFairTabNet, 9, TabNetConfig{}, binary, 1);
  EXPECT_EQ(two.forward(random_tensor(4, 9, rng), Mode::kTrain).sensitive_logits->cols(), 2u);

  Model plain(ModelKind::kTabNet, 9, TabNetConfig{}, FairConfig{}, 1);
  auto base = plain.forward(random_tensor(4, 9, rng), Mode::kTrain);
  EXPECT_FALSE(base.r_s.has_value());
}

TEST(SensitiveBranch, FiniteDifferencesOfSensitiveLoss) {
  Rng rng(24);
  FairConfig fair;
  fair.n_s = 3;
  Model model(ModelKind::kFairTabNet, 4, small_backbone(), fair, 2);
  Tensor x = random_tensor(8, 4, rng, -2, 2);
  std::vector<int> y{0, 1, 1, 0, 1, 0, 0, 1}, cls{0, 1, 2, 3, 3, 2, 1, 0};
  auto loss = [&] { return model.loss(model.forward(x, Mode::kTrain), y, cls).total; };
  for (auto& p : model.parameters()) {
    if (!p.name.starts_with("sensitive.")) continue;
    SCOPED_TRACE(p.name);
    EXPECT_LE(gradient_error(loss, p.tensor), 1e-4);
  }
}

TEST(Model, BackboneInitIndependentOfBranch) {
  Model fair(ModelKind::kFairTabNet, 6, small_backbone(), FairConfig{}, 77);
  Model plain(ModelKind::kTabNet, 6, small_backbone(), FairConfig{}, 77);
  auto a = fair.parameters(), b = plain.parameters();
  ASSERT_GT(a.size(), b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    ASSERT_EQ(a[i].name, b[i].name);
    for (std::size_t k = 0; k < b[i].tensor.size(); ++k)
      ASSERT_EQ(a[i].tensor.data()[k], b[i].tensor.data()[k]);
  }
}

TEST(Model, ZeroWeightsReproduceTabNetGradients) {
  Rng rng(25);
  FairConfig off;
  off.lambda_d = off.lambda_s = 0.0;
  Model fair(ModelKind::kFairTabNet, 5, small_backbone(), off, 3);
  Model plain(ModelKind::kTabNet, 5, small_backbone(), off, 3);
  Tensor x = random_tensor(12, 5, rng);
  std::vector<int> y{0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 0}, cls{0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3};
  double losses[2];
  Model* models[2] = {&fair, &plain};
  for (int m = 0; m < 2; ++m) {
    Tape tape;
    auto terms = models[m]->loss(models[m]->forward(x, Mode::kTrain), y, cls);
    losses[m] = terms.total.item();
    tape.backward(terms.total);
  }
  EXPECT_EQ(losses[0], losses[1]);
  auto a = fair.parameters(), b = plain.parameters();
  for (std::size_t i = 0; i < b.size(); ++i) {
    SCOPED_TRACE(b[i].name);
    ASSERT_TRUE(a[i].tensor.has_grad());
    for (std::size_t k = 0; k < b[i].tensor.size(); ++k)
      ASSERT_EQ(a[i].tensor.grad()[k], b[i].tensor.grad()[k]);
  }
}

TEST(Model, PositiveWeightsCoupleBothBranches) {
  Rng rng(26);
  Model fair(ModelKind::kFairTabNet, 5, small_backbone(), FairConfig{}, 4);
  Tensor x = random_tensor(12, 5, rng);
  std::vector<int> y(12, 0), cls(12, 1);
  y[0] = 1;
  Tape tape;
  auto terms = fair.loss(fair.forward(x, Mode::kTrain), y, cls);
  ASSERT_TRUE(terms.diff.has_value());
  tape.backward(terms.total);
  double branch_norm = 0.0;
  for (auto& p : fair.parameters()) {
    if (!p.name.starts_with("sensitive.") || !p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) branch_norm += g * g;
  }
  EXPECT_GT(branch_norm, 0.0);
}

TEST(ExportRepresentations, ShapeDeterminismAndErrors) {
  Rng rng(27);
  FairConfig fair;
  fair.n_s = 3;
  Model model(ModelKind::kFairTabNet, 4, small_backbone(), fair, 5);
  Tensor x = random_tensor(5, 4, rng);
  std::vector<int> cls{0, 1, 2, 3, 0}, y{1, 0, 0, 1, 0};
  expect_error(ErrorKind::kState, [&] { export_representations(model, x, cls, y); });
  model.set_trained(true);
  auto rows = export_representations(model, x, cls, y);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0].r_p.size(), 4u);
  EXPECT_EQ(rows[0].r_s.size(), 3u);
  EXPECT_EQ(rows[2].sensitive_class, 2);

  std::ostringstream first, second;
  write_representations_csv(first, rows);
  write_representations_csv(second, export_representations(model, x, cls, y));
  EXPECT_EQ(first.str(), second.str());
  EXPECT_EQ(first.str().substr(0, first.str().find('\n')),
            "r_p_0,r_p_1,r_p_2,r_p_3,r_s_0,r_s_1,r_s_2,sensitive_class,label");

  expect_error(ErrorKind::kState, [&] { export_representations(model, random_tensor(5, 3, rng), cls, y); });
  Model plain(ModelKind::kTabNet, 4, small_backbone(), fair, 5);
  plain.set_trained(true);
  expect_error(ErrorKind::kState, [&] { export_representations(plain, x, cls, y); });
}

}  // namespace
}  // namespace fairtab
