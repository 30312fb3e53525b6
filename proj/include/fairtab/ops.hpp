#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fairtab/tensor.hpp"

namespace fairtab {

namespace detail {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajorMatrix>;
using MutableMap = Eigen::Map<RowMajorMatrix>;

inline std::string shape_of(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

enum class Broadcast { kSame, kRow, kScalar };

inline Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::kSame;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::kScalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  fail(ErrorKind::kShape, std::string(op) + ": cannot combine " + shape_of(a) + " with " +
                              shape_of(b));
}

inline std::size_t broadcast_index(Broadcast kind, std::size_t i, std::size_t cols) {
  switch (kind) {
    case Broadcast::kSame: return i;
    case Broadcast::kRow: return i % cols;
    case Broadcast::kScalar: return 0;
  }
  return 0;
}

}  // namespace detail

/// Matrix product a[m x k] * b[k x n].
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorKind::kShape, "matmul: inner dimensions differ (" + detail::shape_of(a) + " * " +
                                detail::shape_of(b) + ")");
  }
  const auto m = static_cast<Eigen::Index>(a.rows());
  const auto k = static_cast<Eigen::Index>(a.cols());
  const auto n = static_cast<Eigen::Index>(b.cols());
  std::vector<double> out(a.rows() * b.cols(), 0.0);
  if (k > 0) {
    detail::MutableMap(out.data(), m, n).noalias() =
        detail::ConstMap(a.data().data(), m, k) * detail::ConstMap(b.data().data(), k, n);
  }
  return detail::make_result(a.rows(), b.cols(), std::move(out), {&a, &b},
                             [a, b, m, k, n](const detail::Node& self) {
                               detail::ConstMap g(self.grad.data(), m, n);
                               if (auto* ga = detail::grad_sink(a)) {
                                 detail::MutableMap(ga->data(), m, k).noalias() +=
                                     g * detail::ConstMap(b.data().data(), k, n).transpose();
                               }
                               if (auto* gb = detail::grad_sink(b)) {
                                 detail::MutableMap(gb->data(), k, n).noalias() +=
                                     detail::ConstMap(a.data().data(), m, k).transpose() * g;
                               }
                             });
}

inline Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a.data()[i * c + j];
  return detail::make_result(c, r, std::move(out), {&a}, [a, r, c](const detail::Node& self) {
    auto* ga = detail::grad_sink(a);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) (*ga)[i * c + j] += self.grad[j * r + i];
  });
}

enum class OpKind { kAdd, kSub, kMul, kRelu, kSigmoid, kExp, kLog, kScale };

inline Tensor add(const Tensor& a, const Tensor& b) {
  const auto kind = detail::broadcast_kind(a, b, "add");
  const std::size_t cols = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.data()[i] + b.data()[detail::broadcast_index(kind, i, cols)];
  return detail::make_result(a.rows(), a.cols(), std::move(out), {&a, &b},
                             [a, b, kind, cols](const detail::Node& self) {
                               if (auto* ga = detail::grad_sink(a))
                                 for (std::size_t i = 0; i < self.grad.size(); ++i)
                                   (*ga)[i] += self.grad[i];
                               if (auto* gb = detail::grad_sink(b))
                                 for (std::size_t i = 0; i < self.grad.size(); ++i)
                                   (*gb)[detail::broadcast_index(kind, i, cols)] += self.grad[i];
                             });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  const auto kind = detail::broadcast_kind(a, b, "sub");
  const std::size_t cols = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.data()[i] - b.data()[detail::broadcast_index(kind, i, cols)];
  return detail::make_result(a.rows(), a.cols(), std::move(out), {&a, &b},
                             [a, b, kind, cols](const detail::Node& self) {
                               if (auto* ga = detail::grad_sink(a))
                                 for (std::size_t i = 0; i < self.grad.size(); ++i)
                                   (*ga)[i] += self.grad[i];
                               if (auto* gb = detail::grad_sink(b))
                                 for (std::size_t i = 0; i < self.grad.size(); ++i)
                                   (*gb)[detail::broadcast_index(kind, i, cols)] -= self.grad[i];
                             });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  const auto kind = detail::broadcast_kind(a, b, "mul");
  const std::size_t cols = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.data()[i] * b.data()[detail::broadcast_index(kind, i, cols)];
  return detail::make_result(
      a.rows(), a.cols(), std::move(out), {&a, &b}, [a, b, kind, cols](const detail::Node& self) {
        if (auto* ga = detail::grad_sink(a))
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            (*ga)[i] += self.grad[i] * b.data()[detail::broadcast_index(kind, i, cols)];
        if (auto* gb = detail::grad_sink(b))
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            (*gb)[detail::broadcast_index(kind, i, cols)] += self.grad[i] * a.data()[i];
      });
}

inline Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return detail::make_result(a.rows(), a.cols(), std::move(out), {&a},
                             [a, factor](const detail::Node& self) {
                               auto* ga = detail::grad_sink(a);
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 (*ga)[i] += self.grad[i] * factor;
                             });
}

/// a + c for a constant c.
inline Tensor add_constant(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + c;
  return detail::make_result(a.rows(), a.cols(), std::move(out), {&a},
                             [a](const detail::Node& self) {
                               auto* ga = detail::grad_sink(a);
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 (*ga)[i] += self.grad[i];
                             });
}

inline Tensor relu(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
  return detail::make_result(a.rows(), a.cols(), std::move(out), {&a},
                             [a](const detail::Node& self) {
                               auto* ga = detail::grad_sink(a);
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 if (a.data()[i] > 0.0) (*ga)[i] += self.grad[i];
                             });
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(a.data()[i]);
  auto values = out;
  return detail::make_result(a.rows(), a.cols(), std::move(out), {&a},
                             [a, values = std::move(values)](const detail::Node& self) {
                               auto* ga = detail::grad_sink(a);
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 (*ga)[i] += self.grad[i] * values[i] * (1.0 - values[i]);
                             });
}

inline Tensor exp(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.data()[i]);
  auto values = out;
  return detail::make_result(a.rows(), a.cols(), std::move(out), {&a},
                             [a, values = std::move(values)](const detail::Node& self) {
                               auto* ga = detail::grad_sink(a);
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 (*ga)[i] += self.grad[i] * values[i];
                             });
}

inline Tensor log(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(a.data()[i] > 0.0)) {
      fail(ErrorKind::kDomain, "log of non-positive value " + std::to_string(a.data()[i]));
    }
    out[i] = std::log(a.data()[i]);
  }
  return detail::make_result(a.rows(), a.cols(), std::move(out), {&a},
                             [a](const detail::Node& self) {
                               auto* ga = detail::grad_sink(a);
                               for (std::size_t i = 0; i < self.grad.size(); ++i)
                                 (*ga)[i] += self.grad[i] / a.data()[i];
                             });
}

/// Single entry point over the elementwise kinds. Binary kinds require b;
/// kScale reads its factor from a 1x1 b (treated as a constant).
inline Tensor elementwise(OpKind kind, const Tensor& a, const std::optional<Tensor>& b = {}) {
  auto need_b = [&]() -> const Tensor& {
    if (!b) fail(ErrorKind::kShape, "binary elementwise op without a second operand");
    return *b;
  };
  switch (kind) {
    case OpKind::kAdd: return add(a, need_b());
    case OpKind::kSub: return sub(a, need_b());
    case OpKind::kMul: return mul(a, need_b());
    case OpKind::kRelu: return relu(a);
    case OpKind::kSigmoid: return sigmoid(a);
    case OpKind::kExp: return exp(a);
    case OpKind::kLog: return log(a);
    case OpKind::kScale: return scale(a, need_b().item());
  }
  fail(ErrorKind::kContract, "unknown elementwise op");
}

/// Sum of all entries as a 1x1 tensor.
inline Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return detail::make_result(1, 1, {total}, {&a}, [a](const detail::Node& self) {
    auto* ga = detail::grad_sink(a);
    for (double& g : *ga) g += self.grad[0];
  });
}

inline Tensor mean(const Tensor& a) {
  if (a.size() == 0) fail(ErrorKind::kShape, "mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

/// Per-row sums, b x n -> b x 1.
inline Tensor row_sum(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i] += a.data()[i * c + j];
  return detail::make_result(r, 1, std::move(out), {&a}, [a, r, c](const detail::Node& self) {
    auto* ga = detail::grad_sink(a);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) (*ga)[i * c + j] += self.grad[i];
  });
}

/// Columns [begin, end).
inline Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.cols()) {
    fail(ErrorKind::kShape, "slice_cols [" + std::to_string(begin) + "," + std::to_string(end) +
                                ") out of range for " + detail::shape_of(a));
  }
  const std::size_t r = a.rows(), c = a.cols(), w = end - begin;
  std::vector<double> out(r * w);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = a.data()[i * c + begin + j];
  return detail::make_result(r, w, std::move(out), {&a},
                             [a, r, c, w, begin](const detail::Node& self) {
                               auto* ga = detail::grad_sink(a);
                               for (std::size_t i = 0; i < r; ++i)
                                 for (std::size_t j = 0; j < w; ++j)
                                   (*ga)[i * c + begin + j] += self.grad[i * w + j];
                             });
}

}  // namespace fairtab
