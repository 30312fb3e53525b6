#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fairtab/ops.hpp"

namespace fairtab {

// ---------------------------------------------------------------------------
// sparsemax
// ---------------------------------------------------------------------------

/// Euclidean projection of one row onto the probability simplex. Returns the
/// threshold tau so that out[i] = max(z[i] - tau, 0) sums to one.
inline double sparsemax_row(std::span<const double> z, std::span<double> out) {
  const std::size_t n = z.size();
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  // Work relative to the largest entry so huge logits do not cancel.
  const double top = sorted[0];
  for (double& v : sorted) v -= top;
  double cumulative = 0.0;
  double support_sum = 0.0;
  std::size_t support = 0;
  for (std::size_t k = 0; k < n; ++k) {
    cumulative += sorted[k];
    // k+1 belongs to the support while 1 + (k+1) z_(k+1) > sum_{j<=k+1} z_(j).
    if (1.0 + static_cast<double>(k + 1) * sorted[k] > cumulative) {
      support = k + 1;
      support_sum = cumulative;
    }
  }
  const double tau = (support_sum - 1.0) / static_cast<double>(support);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max((z[i] - top) - tau, 0.0);
  return tau + top;
}

/// Row-wise sparsemax of a b x n tensor.
inline Tensor sparsemax(const Tensor& z) {
  const std::size_t r = z.rows(), c = z.cols();
  if (c == 0) fail(ErrorKind::kShape, "sparsemax needs at least one column");
  for (double v : z.data()) {
    if (!std::isfinite(v)) fail(ErrorKind::kDomain, "sparsemax input is not finite");
  }
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    sparsemax_row(z.data().subspan(i * c, c), std::span<double>(out).subspan(i * c, c));
  }
  auto probs = out;
  return detail::make_result(
      r, c, std::move(out), {&z}, [z, r, c, probs = std::move(probs)](const detail::Node& self) {
        auto* gz = detail::grad_sink(z);
        for (std::size_t i = 0; i < r; ++i) {
          double total = 0.0;
          std::size_t support = 0;
          for (std::size_t j = 0; j < c; ++j) {
            if (probs[i * c + j] > 0.0) {
              total += self.grad[i * c + j];
              ++support;
            }
          }
          const double avg = total / static_cast<double>(support);
          for (std::size_t j = 0; j < c; ++j) {
            if (probs[i * c + j] > 0.0) (*gz)[i * c + j] += self.grad[i * c + j] - avg;
          }
        }
      });
}

// ---------------------------------------------------------------------------
// batch normalization
// ---------------------------------------------------------------------------

enum class Mode { kTrain, kEval };

struct BatchNormState {
  explicit BatchNormState(std::size_t width = 0)
      : running_mean(1, width, 0.0), running_var(1, width, 1.0) {}

  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.9;
  double eps = 1e-5;
};

/// Column-wise normalization with learnable scale (gamma) and shift (beta),
/// both 1 x n. Train mode uses batch statistics and updates the running
/// statistics in place; eval mode reads them.
inline Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         BatchNormState& state, Mode mode) {
  const std::size_t b = x.rows(), n = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != n || beta.rows() != 1 || beta.cols() != n ||
      state.running_mean.cols() != n) {
    fail(ErrorKind::kShape, "batch_norm: parameter width does not match input " +
                                detail::shape_of(x));
  }
  if (mode == Mode::kTrain && b < 2) {
    fail(ErrorKind::kBatchSize, "batch_norm in train mode needs at least 2 rows, got " +
                                    std::to_string(b));
  }
  std::vector<double> mu(n, 0.0), inv_std(n, 0.0);
  if (mode == Mode::kTrain) {
    std::vector<double> var(n, 0.0);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < n; ++j) mu[j] += x.data()[i * n + j];
    for (std::size_t j = 0; j < n; ++j) mu[j] /= static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double d = x.data()[i * n + j] - mu[j];
        var[j] += d * d;
      }
    auto rm = state.running_mean.data();
    auto rv = state.running_var.data();
    for (std::size_t j = 0; j < n; ++j) {
      const double biased = var[j] / static_cast<double>(b);
      inv_std[j] = 1.0 / std::sqrt(biased + state.eps);
      rm[j] = state.momentum * rm[j] + (1.0 - state.momentum) * mu[j];
      rv[j] = state.momentum * rv[j] +
              (1.0 - state.momentum) * (var[j] / static_cast<double>(b - 1));
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      mu[j] = state.running_mean.data()[j];
      inv_std[j] = 1.0 / std::sqrt(state.running_var.data()[j] + state.eps);
    }
  }

  std::vector<double> xhat(b * n), out(b * n);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = i * n + j;
      xhat[k] = (x.data()[k] - mu[j]) * inv_std[j];
      out[k] = gamma.data()[j] * xhat[k] + beta.data()[j];
    }

  return detail::make_result(
      b, n, std::move(out), {&x, &gamma, &beta},
      [x, gamma, beta, b, n, mode, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](const detail::Node& self) {
        const auto& g = self.grad;
        if (auto* gg = detail::grad_sink(gamma))
          for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < n; ++j) (*gg)[j] += g[i * n + j] * xhat[i * n + j];
        if (auto* gb = detail::grad_sink(beta))
          for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < n; ++j) (*gb)[j] += g[i * n + j];
        auto* gx = detail::grad_sink(x);
        if (gx == nullptr) return;
        if (mode == Mode::kEval) {
          for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < n; ++j)
              (*gx)[i * n + j] += g[i * n + j] * gamma.data()[j] * inv_std[j];
          return;
        }
        std::vector<double> sum_d(n, 0.0), sum_dx(n, 0.0);
        for (std::size_t i = 0; i < b; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double d = g[i * n + j] * gamma.data()[j];
            sum_d[j] += d;
            sum_dx[j] += d * xhat[i * n + j];
          }
        const double inv_b = 1.0 / static_cast<double>(b);
        for (std::size_t i = 0; i < b; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t k = i * n + j;
            const double d = g[k] * gamma.data()[j];
            (*gx)[k] += inv_std[j] * (d - inv_b * sum_d[j] - xhat[k] * inv_b * sum_dx[j]);
          }
      });
}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

namespace detail {

inline void require_finite(const Tensor& t, const char* what) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) fail(ErrorKind::kNumeric, std::string(what) + " contains non-finite values");
  }
}

}  // namespace detail

/// Mean binary cross-entropy on logits (b x 1) against labels in {0, 1}.
inline Tensor binary_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.cols() != 1 || logits.rows() != labels.size()) {
    fail(ErrorKind::kShape, "binary_cross_entropy: logits " + detail::shape_of(logits) +
                                " vs " + std::to_string(labels.size()) + " labels");
  }
  detail::require_finite(logits, "binary_cross_entropy logits");
  const std::size_t b = labels.size();
  if (b == 0) fail(ErrorKind::kShape, "binary_cross_entropy on an empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      fail(ErrorKind::kLabel, "binary label " + std::to_string(labels[i]) + " at row " +
                                  std::to_string(i));
    }
    const double z = logits.data()[i];
    total += std::max(z, 0.0) - z * labels[i] + std::log1p(std::exp(-std::abs(z)));
  }
  std::vector<int> y(labels.begin(), labels.end());
  return detail::make_result(1, 1, {total / static_cast<double>(b)}, {&logits},
                             [logits, y = std::move(y), b](const detail::Node& self) {
                               auto* gl = detail::grad_sink(logits);
                               const double scale = self.grad[0] / static_cast<double>(b);
                               for (std::size_t i = 0; i < b; ++i)
                                 (*gl)[i] += scale * (stable_sigmoid(logits.data()[i]) - y[i]);
                             });
}

/// Mean categorical cross-entropy on logits (b x K) against class ids in [0, K).
inline Tensor categorical_cross_entropy(const Tensor& logits, std::span<const int> classes) {
  const std::size_t b = logits.rows(), k = logits.cols();
  if (b != classes.size() || k == 0) {
    fail(ErrorKind::kShape, "categorical_cross_entropy: logits " + detail::shape_of(logits) +
                                " vs " + std::to_string(classes.size()) + " labels");
  }
  if (b == 0) fail(ErrorKind::kShape, "categorical_cross_entropy on an empty batch");
  detail::require_finite(logits, "categorical_cross_entropy logits");
  std::vector<double> softmax(b * k);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    if (classes[i] < 0 || static_cast<std::size_t>(classes[i]) >= k) {
      fail(ErrorKind::kLabel, "class " + std::to_string(classes[i]) + " at row " +
                                  std::to_string(i) + " outside [0," + std::to_string(k) + ")");
    }
    const auto row = logits.data().subspan(i * k, k);
    const double peak = *std::max_element(row.begin(), row.end());
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      softmax[i * k + j] = std::exp(row[j] - peak);
      denom += softmax[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) softmax[i * k + j] /= denom;
    total += peak + std::log(denom) - row[static_cast<std::size_t>(classes[i])];
  }
  std::vector<int> y(classes.begin(), classes.end());
  return detail::make_result(
      1, 1, {total / static_cast<double>(b)}, {&logits},
      [logits, y = std::move(y), softmax = std::move(softmax), b, k](const detail::Node& self) {
        auto* gl = detail::grad_sink(logits);
        const double scale = self.grad[0] / static_cast<double>(b);
        for (std::size_t i = 0; i < b; ++i)
          for (std::size_t j = 0; j < k; ++j) {
            const double target = static_cast<int>(j) == y[i] ? 1.0 : 0.0;
            (*gl)[i * k + j] += scale * (softmax[i * k + j] - target);
          }
      });
}

/// Squared Frobenius norm, sum of squared entries.
inline Tensor frobenius_sq(const Tensor& m) {
  double total = 0.0;
  for (double v : m.data()) total += v * v;
  return detail::make_result(1, 1, {total}, {&m}, [m](const detail::Node& self) {
    auto* gm = detail::grad_sink(m);
    for (std::size_t i = 0; i < gm->size(); ++i) (*gm)[i] += 2.0 * self.grad[0] * m.data()[i];
  });
}

}  // namespace fairtab
