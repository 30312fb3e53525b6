#pragma once

#include <cmath>
#include <vector>

#include "fairtab/error.hpp"
#include "fairtab/tensor.hpp"

namespace fairtab {

struct AdamConfig {
  double learning_rate = 0.02;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail(ErrorKind::kConfig, "learning rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      fail(ErrorKind::kConfig, "Adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) fail(ErrorKind::kConfig, "Adam eps must be > 0");
  }
};

/// Adam with bias-corrected moments. Parameters without a gradient in a step
/// are left untouched and do not advance their step count.
class Adam {
 public:
  Adam(std::vector<Tensor> params, const AdamConfig& config)
      : params_(std::move(params)), config_(config), lr_(config.learning_rate) {
    config_.validate();
    for (const auto& p : params_) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
    t_.assign(params_.size(), 0);
  }

  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor& p = params_[i];
      if (!p.has_grad()) continue;
      const double t = static_cast<double>(++t_[i]);
      const double c1 = 1.0 - std::pow(config_.beta1, t);
      const double c2 = 1.0 - std::pow(config_.beta2, t);
      auto g = p.grad();
      auto w = p.data();
      for (std::size_t k = 0; k < w.size(); ++k) {
        m_[i][k] = config_.beta1 * m_[i][k] + (1.0 - config_.beta1) * g[k];
        v_[i][k] = config_.beta2 * v_[i][k] + (1.0 - config_.beta2) * g[k] * g[k];
        w[k] -= lr_ * (m_[i][k] / c1) / (std::sqrt(v_[i][k] / c2) + config_.eps);
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  std::vector<Tensor> params_;
  AdamConfig config_;
  double lr_;
  std::vector<long long> t_;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace fairtab
