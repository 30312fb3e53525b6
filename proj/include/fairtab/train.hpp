#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "fairtab/dataset.hpp"
#include "fairtab/fair_tabnet.hpp"
#include "fairtab/optimizer.hpp"
#include "fairtab/ranking.hpp"

namespace fairtab {

struct TrainConfig {
  AdamConfig adam;
  double lr_decay = 0.95;  // multiplicative, applied after every epoch
  std::size_t batch_size = 1024;
  std::size_t epochs = 50;
  std::size_t patience = 5;

  void validate() const {
    adam.validate();
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) fail(ErrorKind::kConfig, "lr_decay must lie in (0, 1]");
    if (batch_size < 2) fail(ErrorKind::kConfig, "batch_size must be >= 2");
    if (patience < 1) fail(ErrorKind::kConfig, "patience must be >= 1");
  }
};

struct EpochTrace {
  std::size_t epoch = 0;  // 1-based
  double pred = 0.0;
  double sens = std::numeric_limits<double>::quiet_NaN();
  double diff = std::numeric_limits<double>::quiet_NaN();
  double sparsity = 0.0;
  double total = 0.0;
  double val_auroc = std::numeric_limits<double>::quiet_NaN();
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::unique_ptr<Model> model;
  std::vector<EpochTrace> trace;
  std::size_t best_epoch = 0;  // 0 = initial weights kept
  bool early_stopped = false;
};

inline Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  const std::size_t c = x.cols();
  std::vector<double> out(rows.size() * c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = x.data().subspan(rows[i] * c, c);
    std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  return Tensor(rows.size(), c, std::move(out));
}

/// Shuffled mini-batches of [0, n). A trailing batch of one row is merged
/// into the previous batch (batch norm needs at least two rows).
inline std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    if (end - start < 2 && !batches.empty()) {
      batches.back().insert(batches.back().end(), order.begin() + static_cast<std::ptrdiff_t>(start),
                            order.begin() + static_cast<std::ptrdiff_t>(end));
    } else {
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return batches;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& v, std::span<const std::size_t> rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(v[r]);
  return out;
}

/// Mini-batch training with Adam, per-epoch learning-rate decay, and early
/// stopping on validation AU-ROC (validation loss when the validation labels
/// are single-class). The returned model holds the best-validation weights.
inline TrainResult train_model(ModelKind kind, const EncodedDataset& train, const EncodedDataset& val,
                               const TabNetConfig& tabnet, const FairConfig& fair, const TrainConfig& config,
                               std::uint64_t seed) {
  config.validate();
  if (train.rows() < 2) fail(ErrorKind::kValidation, "training split needs at least 2 rows");
  if (val.rows() == 0) fail(ErrorKind::kValidation, "validation split is empty");
  const bool has_pos = std::find(train.labels.begin(), train.labels.end(), 1) != train.labels.end();
  const bool has_neg = std::find(train.labels.begin(), train.labels.end(), 0) != train.labels.end();
  if (!has_pos || !has_neg) fail(ErrorKind::kDegenerateLabels, "training split needs both classes");
  for (int c : train.sensitive_class) {
    if (c < 0 || static_cast<std::size_t>(c) >= fair.n_sensitive_classes) {
      fail(ErrorKind::kLabel, "sensitive class " + std::to_string(c) + " outside the model's class count");
    }
  }

  TrainResult result;
  result.model = std::make_unique<Model>(kind, train.features.cols(), tabnet, fair, seed);
  Model& model = *result.model;
  std::vector<Tensor> params;
  for (auto& p : model.parameters()) params.push_back(p.tensor);
  Adam adam(params, config.adam);
  Rng batch_rng(derive_seed(seed, SeedStream::kBatchOrder));

  const bool val_two_class = std::find(val.labels.begin(), val.labels.end(), 1) != val.labels.end() &&
                             std::find(val.labels.begin(), val.labels.end(), 0) != val.labels.end();
  double best = -std::numeric_limits<double>::infinity();  // larger is better
  auto best_state = model.snapshot();
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochTrace trace;
    trace.epoch = epoch;
    trace.lr = adam.learning_rate();
    double sens = 0.0, diff = 0.0;
    const auto batches = make_batches(train.rows(), config.batch_size, batch_rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& rows = batches[b];
      const Tensor x = gather_rows(train.features, rows);
      const auto y = pick(train.labels, rows);
      const auto cls = pick(train.sensitive_class, rows);
      Tape tape;
      LossTerms terms;
      double sparsity = 0.0;
      try {
        FairForward fwd = model.forward(x, Mode::kTrain);
        terms = model.loss(fwd, y, cls);
        if (fwd.sparsity_loss) sparsity = fwd.sparsity_loss->item();
        if (!std::isfinite(terms.total.item())) fail(ErrorKind::kNumeric, "total loss is not finite");
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumeric && e.kind() != ErrorKind::kDomain) throw;
        fail(ErrorKind::kTraining, "diverged at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(b + 1) + ": " + e.what());
      }
      tape.backward(terms.total);
      adam.step();
      adam.zero_grad();

      const double w = static_cast<double>(rows.size()) / static_cast<double>(train.rows());
      trace.pred += w * terms.pred.item();
      trace.total += w * terms.total.item();
      trace.sparsity += w * sparsity;
      if (terms.sens) sens += w * terms.sens->item();
      if (terms.diff) diff += w * terms.diff->item();
    }
    if (kind == ModelKind::kFairTabNet) {
      trace.sens = sens;
      trace.diff = diff;
    }

    FairForward vf = model.forward(val.features, Mode::kEval);
    trace.val_loss = binary_cross_entropy(vf.logits, val.labels).item();
    double score = -trace.val_loss;
    if (val_two_class) {
      std::vector<double> p(val.rows());
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = stable_sigmoid(vf.logits.data()[i]);
      trace.val_auroc = auroc(val.labels, p);
      score = trace.val_auroc;
    }
    result.trace.push_back(trace);
    if (score > best) {
      best = score;
      best_state = model.snapshot();
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      result.early_stopped = true;
      break;
    }
    adam.set_learning_rate(adam.learning_rate() * config.lr_decay);
  }
  model.restore(best_state);
  model.set_trained(true);
  return result;
}

inline void write_loss_trace(std::ostream& out, const std::vector<EpochTrace>& trace) {
  out << "epoch,pred,sens,diff,sparsity,total,val_auroc,val_loss,lr\n";
  for (const auto& t : trace) {
    out << t.epoch << ',' << format_double(t.pred) << ',' << format_double(t.sens) << ','
        << format_double(t.diff) << ',' << format_double(t.sparsity) << ',' << format_double(t.total) << ','
        << format_double(t.val_auroc) << ',' << format_double(t.val_loss) << ',' << format_double(t.lr) << '\n';
  }
}

/// Held-out disentanglement measure ||r_p^T r_s||_F^2 / b^2 (eval mode).
inline double representation_overlap(Model& model, const Tensor& x) {
  FairForward fwd = model.forward(x, Mode::kEval);
  if (!fwd.r_s) fail(ErrorKind::kState, "representation overlap needs a fair_tabnet model");
  const double b = static_cast<double>(x.rows());
  return diff_loss(fwd.r_p, *fwd.r_s).item() / (b * b);
}

}  // namespace fairtab
