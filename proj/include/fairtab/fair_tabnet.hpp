#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fairtab/format.hpp"
#include "fairtab/tabnet.hpp"

namespace fairtab {

struct FairConfig {
  std::size_t n_s = 16;                 // width of the sensitive representation r_s
  double lambda_d = 1.0;                // weight on the sensitive classification loss
  double lambda_s = 1.0;                // weight on the orthogonality penalty
  std::size_t n_sensitive_classes = 4;  // gender x nationality sub-categories

  void validate() const {
    if (n_s < 1) fail(ErrorKind::kConfig, "n_s must be >= 1");
    if (!(lambda_d >= 0.0) || !std::isfinite(lambda_d)) {
      fail(ErrorKind::kConfig, "lambda_d must be a finite value >= 0");
    }
    if (!(lambda_s >= 0.0) || !std::isfinite(lambda_s)) {
      fail(ErrorKind::kConfig, "lambda_s must be a finite value >= 0");
    }
    if (n_sensitive_classes < 2) fail(ErrorKind::kConfig, "n_sensitive_classes must be >= 2");
  }
};

enum class ModelKind { kTabNet, kFairTabNet };

inline std::string to_string(ModelKind kind) {
  return kind == ModelKind::kTabNet ? "tabnet" : "fair_tabnet";
}

inline ModelKind parse_model_kind(const std::string& text) {
  if (text == "tabnet") return ModelKind::kTabNet;
  if (text == "fair_tabnet") return ModelKind::kFairTabNet;
  fail(ErrorKind::kConfig, "unknown model kind '" + text + "' (expected tabnet or fair_tabnet)");
}

/// Squared Frobenius norm of the n_p x n_s cross-correlation r_p^T r_s.
inline Tensor diff_loss(const Tensor& r_p, const Tensor& r_s) {
  if (r_p.rows() != r_s.rows()) {
    fail(ErrorKind::kShape, "diff_loss: batch sizes differ (" + std::to_string(r_p.rows()) +
                                " vs " + std::to_string(r_s.rows()) + ")");
  }
  return frobenius_sq(matmul(transpose(r_p), r_s));
}

/// L_pred + lambda_d * L_sens + lambda_s * L_diff.
inline Tensor total_loss(const Tensor& pred, const Tensor& sens, const Tensor& diff,
                         const FairConfig& config) {
  const struct {
    const char* name;
    const Tensor& value;
  } parts[] = {{"L_pred", pred}, {"L_sens", sens}, {"L_diff", diff}};
  for (const auto& part : parts) {
    if (part.value.size() != 1) fail(ErrorKind::kShape, std::string(part.name) + " is not a scalar");
    if (!std::isfinite(part.value.item())) {
      fail(ErrorKind::kNumeric, std::string(part.name) + " is not finite");
    }
  }
  return add(add(pred, scale(sens, config.lambda_d)), scale(diff, config.lambda_s));
}

/// Sensitive branch: its own GLU stack (two shared-style blocks and one
/// specific block) reading the BN'd input, followed by a classifier.
class SensitiveBranch {
 public:
  SensitiveBranch(std::size_t input_dim, const FairConfig& config, double momentum,
                  std::uint64_t seed) {
    Rng rng(seed);
    shared_ = FeatureTransformer::make_shared_layers(input_dim, config.n_s, 2, rng);
    transformer_ = FeatureTransformer(input_dim, config.n_s, 2, 1, momentum, rng);
    head_ = Linear(config.n_s, config.n_sensitive_classes, true, rng);
  }

  struct Output {
    Tensor r_s;
    Tensor logits;
  };

  Output operator()(const Tensor& features, Mode mode) {
    Tensor r_s = transformer_(features, shared_, mode);
    Tensor logits = head_(r_s);
    return {r_s, logits};
  }

  void collect(std::vector<NamedTensor>& params, std::vector<NamedTensor>& buffers) const {
    for (std::size_t k = 0; k < shared_.size(); ++k)
      shared_[k].collect("sensitive.shared.fc." + std::to_string(k), params);
    transformer_.collect("sensitive.transformer", params, buffers);
    head_.collect("sensitive.head", params);
  }

 private:
  std::vector<Linear> shared_;
  FeatureTransformer transformer_;
  Linear head_;
};

struct FairForward {
  Tensor logits;
  std::optional<Tensor> sensitive_logits;
  Tensor r_p;
  std::optional<Tensor> r_s;
  StepOutputs steps;
  std::optional<Tensor> sparsity_loss;
};

struct LossTerms {
  Tensor pred;
  std::optional<Tensor> sens;
  std::optional<Tensor> diff;
  Tensor total;
};

/// TabNet, optionally extended with the sensitive branch. With the branch
/// disabled this is plain TabNet; backbone initialization does not depend on
/// the branch, so both kinds start from identical backbone weights per seed.
class Model {
 public:
  Model(ModelKind kind, std::size_t input_dim, const TabNetConfig& tabnet,
        const FairConfig& fair, std::uint64_t seed)
      : kind_(kind),
        fair_(fair),
        seed_(seed),
        backbone_(input_dim, tabnet, derive_seed(seed, SeedStream::kBackboneInit)) {
    fair_.validate();
    if (kind == ModelKind::kFairTabNet) {
      branch_.emplace(input_dim, fair_, tabnet.bn_momentum,
                      derive_seed(seed, SeedStream::kSensitiveInit));
    }
  }

  FairForward forward(const Tensor& x, Mode mode) {
    TabNetOutput base = backbone_.forward(x, mode);
    FairForward out{base.logits, std::nullopt, base.r_p, std::nullopt, std::move(base.steps),
                    base.sparsity_loss};
    if (branch_) {
      auto sensitive = (*branch_)(base.features, mode);
      out.r_s = sensitive.r_s;
      out.sensitive_logits = sensitive.logits;
    }
    return out;
  }

  /// Training objective for one batch.
  LossTerms loss(const FairForward& fwd, std::span<const int> labels,
                 std::span<const int> sensitive_classes) const {
    LossTerms terms{binary_cross_entropy(fwd.logits, labels), std::nullopt, std::nullopt, Tensor()};
    if (kind_ == ModelKind::kFairTabNet) {
      terms.sens = categorical_cross_entropy(*fwd.sensitive_logits, sensitive_classes);
      terms.diff = diff_loss(fwd.r_p, *fwd.r_s);
      terms.total = total_loss(terms.pred, *terms.sens, *terms.diff, fair_);
    } else {
      terms.total = terms.pred;
    }
    if (fwd.sparsity_loss) terms.total = add(terms.total, *fwd.sparsity_loss);
    return terms;
  }

  /// Probability of the positive class per row, eval mode, no tape.
  std::vector<double> predict_proba(const Tensor& x) {
    FairForward fwd = forward(x, Mode::kEval);
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(fwd.logits.data()[i]);
    return out;
  }

  std::vector<NamedTensor> parameters() const {
    std::vector<NamedTensor> params, buffers;
    collect(params, buffers);
    return params;
  }

  std::vector<NamedTensor> buffers() const {
    std::vector<NamedTensor> params, buffers;
    collect(params, buffers);
    return buffers;
  }

  /// Parameters followed by buffers, in a fixed order.
  std::vector<NamedTensor> state() const {
    std::vector<NamedTensor> params, buffers;
    collect(params, buffers);
    params.insert(params.end(), buffers.begin(), buffers.end());
    return params;
  }

  std::vector<std::vector<double>> snapshot() const {
    std::vector<std::vector<double>> values;
    for (const auto& entry : state())
      values.emplace_back(entry.tensor.data().begin(), entry.tensor.data().end());
    return values;
  }

  void restore(const std::vector<std::vector<double>>& values) {
    auto entries = state();
    if (values.size() != entries.size()) fail(ErrorKind::kState, "snapshot does not match model");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      auto dst = entries[i].tensor.data();
      if (values[i].size() != dst.size()) fail(ErrorKind::kState, "snapshot does not match model");
      std::copy(values[i].begin(), values[i].end(), dst.begin());
    }
  }

  ModelKind kind() const { return kind_; }
  const TabNetConfig& tabnet_config() const { return backbone_.config(); }
  const FairConfig& fair_config() const { return fair_; }
  std::size_t input_dim() const { return backbone_.input_dim(); }
  std::uint64_t seed() const { return seed_; }
  bool trained() const { return trained_; }
  void set_trained(bool flag) { trained_ = flag; }
  TabNet& backbone() { return backbone_; }

 private:
  void collect(std::vector<NamedTensor>& params, std::vector<NamedTensor>& buffers) const {
    backbone_.collect(params, buffers);
    if (branch_) branch_->collect(params, buffers);
  }

  ModelKind kind_;
  FairConfig fair_;
  std::uint64_t seed_;
  TabNet backbone_;
  std::optional<SensitiveBranch> branch_;
  bool trained_ = false;
};

struct RepresentationRow {
  std::vector<double> r_p;
  std::vector<double> r_s;
  int sensitive_class = 0;
  int label = 0;
};

/// Eval-mode r_p and r_s for every row of x, in row order.
inline std::vector<RepresentationRow> export_representations(Model& model, const Tensor& x,
                                                             std::span<const int> sensitive_classes,
                                                             std::span<const int> labels) {
  if (!model.trained()) fail(ErrorKind::kState, "model has not been trained");
  if (model.kind() != ModelKind::kFairTabNet) {
    fail(ErrorKind::kState, "representation export needs a fair_tabnet model (no r_s otherwise)");
  }
  if (x.cols() != model.input_dim()) {
    fail(ErrorKind::kState, "data has " + std::to_string(x.cols()) + " features, model expects " +
                                std::to_string(model.input_dim()));
  }
  if (sensitive_classes.size() != x.rows() || labels.size() != x.rows()) {
    fail(ErrorKind::kShape, "label vectors do not match the feature rows");
  }
  FairForward fwd = model.forward(x, Mode::kEval);
  const std::size_t n_p = fwd.r_p.cols(), n_s = fwd.r_s->cols();
  std::vector<RepresentationRow> rows(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto rp = fwd.r_p.data().subspan(i * n_p, n_p);
    auto rs = fwd.r_s->data().subspan(i * n_s, n_s);
    rows[i] = {{rp.begin(), rp.end()}, {rs.begin(), rs.end()}, sensitive_classes[i], labels[i]};
  }
  return rows;
}

inline void write_representations_csv(std::ostream& out, const std::vector<RepresentationRow>& rows) {
  const std::size_t n_p = rows.empty() ? 0 : rows.front().r_p.size();
  const std::size_t n_s = rows.empty() ? 0 : rows.front().r_s.size();
  for (std::size_t j = 0; j < n_p; ++j) out << "r_p_" << j << ',';
  for (std::size_t j = 0; j < n_s; ++j) out << "r_s_" << j << ',';
  out << "sensitive_class,label\n";
  for (const auto& row : rows) {
    for (double v : row.r_p) out << format_double(v) << ',';
    for (double v : row.r_s) out << format_double(v) << ',';
    out << row.sensitive_class << ',' << row.label << '\n';
  }
}

}  // namespace fairtab
