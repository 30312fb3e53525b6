#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairtab/nn_ops.hpp"
#include "fairtab/random.hpp"

namespace fairtab {

struct TabNetConfig {
  std::size_t n_p = 16;  // width of the decision representation r_p
  std::size_t n_a = 16;  // width of the attention stream r_a
  std::size_t n_steps = 5;
  double gamma = 1.5;  // prior relaxation
  std::size_t n_shared = 2;
  std::size_t n_step_specific = 2;
  double bn_momentum = 0.9;
  double lambda_sparse = 0.0;  // mask-entropy coefficient

  void validate() const {
    if (n_p < 1 || n_a < 1 || n_steps < 1) {
      fail(ErrorKind::kConfig, "n_p, n_a and n_steps must be >= 1");
    }
    if (!(gamma >= 1.0)) fail(ErrorKind::kConfig, "gamma must be >= 1");
    if (n_shared + n_step_specific < 1) {
      fail(ErrorKind::kConfig, "the feature transformer needs at least one GLU block");
    }
    if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) {
      fail(ErrorKind::kConfig, "bn_momentum must lie in [0, 1)");
    }
    if (!(lambda_sparse >= 0.0)) fail(ErrorKind::kConfig, "lambda_sparse must be >= 0");
  }
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Fully connected layer, x[b x in] * W[in x out] (+ bias).
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, bool with_bias, Rng& rng)
      : weight_(in, out), bias_(with_bias ? Tensor(1, out, 0.0) : Tensor()) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : weight_.data()) w = dist(rng);
    weight_.set_requires_grad();
    if (with_bias) bias_.set_requires_grad();
  }

  Tensor operator()(const Tensor& x) const {
    Tensor y = matmul(x, weight_);
    return bias_.size() > 0 ? add(y, bias_) : y;
  }

  std::size_t in_features() const { return weight_.rows(); }
  std::size_t out_features() const { return weight_.cols(); }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

  void collect(const std::string& prefix, std::vector<NamedTensor>& params) const {
    params.push_back({prefix + ".weight", weight_});
    if (bias_.size() > 0) params.push_back({prefix + ".bias", bias_});
  }

 private:
  Tensor weight_;
  Tensor bias_;
};

class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(std::size_t width, double momentum)
      : gamma_(1, width, 1.0), beta_(1, width, 0.0), state_(width) {
    state_.momentum = momentum;
    gamma_.set_requires_grad();
    beta_.set_requires_grad();
  }

  Tensor operator()(const Tensor& x, Mode mode) { return batch_norm(x, gamma_, beta_, state_, mode); }

  Tensor& gamma() { return gamma_; }
  Tensor& beta() { return beta_; }

  void collect(const std::string& prefix, std::vector<NamedTensor>& params,
               std::vector<NamedTensor>& buffers) const {
    params.push_back({prefix + ".gamma", gamma_});
    params.push_back({prefix + ".beta", beta_});
    buffers.push_back({prefix + ".running_mean", state_.running_mean});
    buffers.push_back({prefix + ".running_var", state_.running_var});
  }

 private:
  Tensor gamma_;
  Tensor beta_;
  BatchNormState state_;
};

/// Gated linear unit over a 2w-wide input: sigmoid(first half) * second half.
inline Tensor glu(const Tensor& h) {
  const std::size_t w = h.cols() / 2;
  return mul(sigmoid(slice_cols(h, 0, w)), slice_cols(h, w, 2 * w));
}

/// Stack of GLU blocks (FC -> BN -> GLU). The first `shared.size()` blocks
/// use FC layers owned elsewhere (shared between steps); the remaining FC
/// layers belong to this transformer. Every block owns its BN. Blocks after
/// the first add a residual scaled by sqrt(0.5).
class FeatureTransformer {
 public:
  FeatureTransformer() = default;
  FeatureTransformer(std::size_t input_dim, std::size_t width, std::size_t n_shared,
                     std::size_t n_specific, double momentum, Rng& rng)
      : input_dim_(input_dim), width_(width), n_shared_(n_shared) {
    for (std::size_t k = 0; k < n_specific; ++k) {
      const std::size_t in = (n_shared == 0 && k == 0) ? input_dim : width;
      specific_.emplace_back(in, 2 * width, false, rng);
    }
    for (std::size_t k = 0; k < n_shared + n_specific; ++k) bns_.emplace_back(2 * width, momentum);
  }

  /// Builds the FC layers that a family of transformers share.
  static std::vector<Linear> make_shared_layers(std::size_t input_dim, std::size_t width,
                                                std::size_t n_shared, Rng& rng) {
    std::vector<Linear> layers;
    for (std::size_t k = 0; k < n_shared; ++k) {
      layers.emplace_back(k == 0 ? input_dim : width, 2 * width, false, rng);
    }
    return layers;
  }

  Tensor operator()(const Tensor& x, std::span<const Linear> shared, Mode mode) {
    if (shared.size() != n_shared_) fail(ErrorKind::kShape, "shared layer count mismatch");
    if (x.cols() != input_dim_) {
      fail(ErrorKind::kShape, "feature transformer expects width " + std::to_string(input_dim_) +
                                  ", got " + std::to_string(x.cols()));
    }
    static const double kResidualScale = std::sqrt(0.5);
    Tensor h = x;
    for (std::size_t k = 0; k < bns_.size(); ++k) {
      const Linear& fc = k < n_shared_ ? shared[k] : specific_[k - n_shared_];
      Tensor out = glu(bns_[k](fc(h), mode));
      h = k == 0 ? out : scale(add(h, out), kResidualScale);
    }
    return h;
  }

  std::size_t output_width() const { return width_; }

  void collect(const std::string& prefix, std::vector<NamedTensor>& params,
               std::vector<NamedTensor>& buffers) const {
    for (std::size_t k = 0; k < specific_.size(); ++k)
      specific_[k].collect(prefix + ".fc." + std::to_string(n_shared_ + k), params);
    for (std::size_t k = 0; k < bns_.size(); ++k)
      bns_[k].collect(prefix + ".bn." + std::to_string(k), params, buffers);
  }

  std::vector<Linear>& specific_layers() { return specific_; }

 private:
  std::size_t input_dim_ = 0;
  std::size_t width_ = 0;
  std::size_t n_shared_ = 0;
  std::vector<Linear> specific_;
  std::vector<BatchNorm> bns_;
};

/// Produces a step mask: sparsemax(prior * BN(FC(r_a))).
class AttentiveTransformer {
 public:
  AttentiveTransformer() = default;
  AttentiveTransformer(std::size_t n_a, std::size_t input_dim, double momentum, Rng& rng)
      : fc_(n_a, input_dim, false, rng), bn_(input_dim, momentum) {}

  Tensor operator()(const Tensor& r_a, const Tensor& prior, Mode mode) {
    for (double p : prior.data()) {
      if (std::isnan(p)) fail(ErrorKind::kNumeric, "attentive transformer prior is not finite");
      if (p < 0.0) fail(ErrorKind::kContract, "attentive transformer prior has a negative entry");
    }
    Tensor logits = bn_(fc_(r_a), mode);
    if (prior.rows() != logits.rows() || prior.cols() != logits.cols()) {
      fail(ErrorKind::kShape, "prior " + detail::shape_of(prior) + " does not match mask " +
                                  detail::shape_of(logits));
    }
    return sparsemax(mul(logits, prior));
  }

  void collect(const std::string& prefix, std::vector<NamedTensor>& params,
               std::vector<NamedTensor>& buffers) const {
    fc_.collect(prefix + ".fc", params);
    bn_.collect(prefix + ".bn", params, buffers);
  }

 private:
  Linear fc_;
  BatchNorm bn_;
};

struct StepOutputs {
  std::vector<Tensor> masks;          // M_t, b x d
  std::vector<Tensor> contributions;  // ReLU(d-part_t), b x n_p
  std::vector<Tensor> priors;         // prior after step t's update (t < n_steps - 1), b x d
  std::vector<Tensor> attention;      // a-part feeding step t+1, b x n_a
  Tensor r_p;                         // accumulated decision embedding
};

struct TabNetOutput {
  Tensor logits;    // b x 1
  Tensor r_p;       // b x n_p
  Tensor features;  // BN'd input, b x d
  StepOutputs steps;
  std::optional<Tensor> sparsity_loss;  // lambda_sparse * mean mask entropy
};

/// The TabNet backbone: input BN, an initial splitter, then n_steps decision
/// steps of (attentive transformer -> masked feature transformer -> split).
class TabNet {
 public:
  TabNet(std::size_t input_dim, const TabNetConfig& config, std::uint64_t seed)
      : config_(config), input_dim_(input_dim) {
    config_.validate();
    if (input_dim == 0) fail(ErrorKind::kConfig, "input dimension must be >= 1");
    Rng rng(seed);
    const std::size_t width = config_.n_p + config_.n_a;
    input_bn_ = BatchNorm(input_dim, config_.bn_momentum);
    shared_ = FeatureTransformer::make_shared_layers(input_dim, width, config_.n_shared, rng);
    for (std::size_t t = 0; t <= config_.n_steps; ++t) {
      transformers_.emplace_back(input_dim, width, config_.n_shared, config_.n_step_specific,
                                 config_.bn_momentum, rng);
    }
    for (std::size_t t = 0; t < config_.n_steps; ++t) {
      attentive_.emplace_back(config_.n_a, input_dim, config_.bn_momentum, rng);
    }
    head_ = Linear(config_.n_p, 1, true, rng);
  }

  // Parameters are shared handles, so copies would alias; moves only.
  TabNet(const TabNet&) = delete;
  TabNet& operator=(const TabNet&) = delete;
  TabNet(TabNet&&) = default;
  TabNet& operator=(TabNet&&) = default;

  TabNetOutput forward(const Tensor& x, Mode mode) {
    if (x.cols() != input_dim_) {
      fail(ErrorKind::kShape, "model expects " + std::to_string(input_dim_) + " features, got " +
                                  std::to_string(x.cols()));
    }
    const std::size_t b = x.rows();
    const std::size_t n_p = config_.n_p, n_a = config_.n_a;
    TabNetOutput out;
    out.features = input_bn_(x, mode);

    Tensor prior(b, input_dim_, 1.0);
    Tensor attention = slice_cols(transformers_[0](out.features, shared_, mode), n_p, n_p + n_a);
    std::optional<Tensor> decision;
    std::optional<Tensor> entropy;
    for (std::size_t t = 0; t < config_.n_steps; ++t) {
      Tensor mask = attentive_[t](attention, prior, mode);
      if (t + 1 < config_.n_steps) {
        prior = mul(prior, add_constant(scale(mask, -1.0), config_.gamma));
        out.steps.priors.push_back(prior);
      }
      if (config_.lambda_sparse > 0.0) {
        Tensor step_entropy = scale(sum(mul(mask, fairtab::log(add_constant(mask, 1e-10)))),
                                    -1.0 / static_cast<double>(b));
        entropy = entropy ? add(*entropy, step_entropy) : step_entropy;
      }
      Tensor h = transformers_[t + 1](mul(out.features, mask), shared_, mode);
      Tensor contribution = relu(slice_cols(h, 0, n_p));
      attention = slice_cols(h, n_p, n_p + n_a);
      decision = decision ? add(*decision, contribution) : contribution;

      out.steps.masks.push_back(mask);
      out.steps.contributions.push_back(contribution);
      out.steps.attention.push_back(attention);
    }
    out.r_p = *decision;
    out.steps.r_p = out.r_p;
    out.logits = head_(out.r_p);
    if (entropy) {
      out.sparsity_loss =
          scale(*entropy, config_.lambda_sparse / static_cast<double>(config_.n_steps));
    }
    return out;
  }

  const TabNetConfig& config() const { return config_; }
  std::size_t input_dim() const { return input_dim_; }

  void collect(std::vector<NamedTensor>& params, std::vector<NamedTensor>& buffers) const {
    input_bn_.collect("input_bn", params, buffers);
    for (std::size_t k = 0; k < shared_.size(); ++k)
      shared_[k].collect("shared.fc." + std::to_string(k), params);
    for (std::size_t t = 0; t < transformers_.size(); ++t)
      transformers_[t].collect("step" + std::to_string(t), params, buffers);
    for (std::size_t t = 0; t < attentive_.size(); ++t)
      attentive_[t].collect("attentive" + std::to_string(t + 1), params, buffers);
    head_.collect("head", params);
  }

  // Component access for targeted tests.
  std::vector<Linear>& shared_layers() { return shared_; }
  FeatureTransformer& transformer(std::size_t step) { return transformers_.at(step); }
  AttentiveTransformer& attentive(std::size_t step) { return attentive_.at(step - 1); }

 private:
  TabNetConfig config_;
  std::size_t input_dim_;
  BatchNorm input_bn_;
  std::vector<Linear> shared_;
  std::vector<FeatureTransformer> transformers_;  // [0] is the initial splitter
  std::vector<AttentiveTransformer> attentive_;
  Linear head_;
};

struct MaskImportance {
  Tensor values;                          // b x d, rows sum to 1
  std::vector<std::size_t> uniform_rows;  // rows with zero total contribution
};

/// Aggregated feature importance: per row, masks weighted by the step's
/// decision magnitude eta_t = sum_c ReLU(d-part_t), then row-normalized.
inline MaskImportance aggregate_mask_importance(const StepOutputs& steps) {
  if (steps.masks.empty() || steps.masks.size() != steps.contributions.size()) {
    fail(ErrorKind::kState, "aggregate_mask_importance needs the outputs of a completed forward");
  }
  const std::size_t b = steps.masks.front().rows(), d = steps.masks.front().cols();
  MaskImportance result{Tensor(b, d, 0.0), {}};
  auto agg = result.values.data();
  for (std::size_t t = 0; t < steps.masks.size(); ++t) {
    const Tensor& mask = steps.masks[t];
    const Tensor& contrib = steps.contributions[t];
    for (std::size_t i = 0; i < b; ++i) {
      double eta = 0.0;
      for (std::size_t c = 0; c < contrib.cols(); ++c) eta += std::max(contrib.at(i, c), 0.0);
      for (std::size_t j = 0; j < d; ++j) agg[i * d + j] += eta * mask.at(i, j);
    }
  }
  for (std::size_t i = 0; i < b; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < d; ++j) total += agg[i * d + j];
    if (total > 0.0) {
      for (std::size_t j = 0; j < d; ++j) agg[i * d + j] /= total;
    } else {
      for (std::size_t j = 0; j < d; ++j) agg[i * d + j] = 1.0 / static_cast<double>(d);
      result.uniform_rows.push_back(i);
    }
  }
  return result;
}

}  // namespace fairtab
