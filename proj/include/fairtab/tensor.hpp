#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairtab/error.hpp"

namespace fairtab {

namespace detail {

struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
  // Reads this node's grad and accumulates into the inputs captured by the closure.
  std::function<void(const Node&)> backward;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

/// Dense row-major 2-D array of doubles. Copies are shallow handles onto the
/// same storage; use clone() for a detached copy.
class Tensor {
 public:
  Tensor() : Tensor(0, 0) {}

  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : node_(std::make_shared<detail::Node>()) {
    node_->rows = rows;
    node_->cols = cols;
    node_->data.assign(rows * cols, fill);
  }

  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
      : node_(std::make_shared<detail::Node>()) {
    if (values.size() != rows * cols) {
      fail(ErrorKind::kShape, "tensor data length " + std::to_string(values.size()) +
                                  " does not match " + std::to_string(rows) + "x" +
                                  std::to_string(cols));
    }
    node_->rows = rows;
    node_->cols = cols;
    node_->data = std::move(values);
  }

  /// Builds a tensor from nested rows; all rows must have equal length.
  static Tensor from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.front().size();
    std::vector<double> values;
    values.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) fail(ErrorKind::kShape, "ragged rows");
      values.insert(values.end(), row.begin(), row.end());
    }
    return Tensor(r, c, std::move(values));
  }

  static Tensor scalar(double value) { return Tensor(1, 1, value); }

  std::size_t rows() const noexcept { return node_->rows; }
  std::size_t cols() const noexcept { return node_->cols; }
  std::size_t size() const noexcept { return node_->data.size(); }

  std::span<double> data() noexcept { return node_->data; }
  std::span<const double> data() const noexcept { return node_->data; }

  double& at(std::size_t r, std::size_t c) { return node_->data[r * node_->cols + c]; }
  double at(std::size_t r, std::size_t c) const { return node_->data[r * node_->cols + c]; }
  double item() const {
    if (size() != 1) fail(ErrorKind::kShape, "item() on a non-scalar tensor");
    return node_->data[0];
  }

  bool requires_grad() const noexcept { return node_->requires_grad; }
  Tensor& set_requires_grad(bool flag = true) {
    node_->requires_grad = flag;
    return *this;
  }

  bool has_grad() const noexcept { return node_->grad.size() == node_->data.size(); }
  std::span<const double> grad() const noexcept { return node_->grad; }
  std::span<double> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() { node_->grad.clear(); }

  Tensor clone() const { return Tensor(rows(), cols(), node_->data); }

  bool same_storage(const Tensor& other) const noexcept { return node_ == other.node_; }

  const std::shared_ptr<detail::Node>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Define-by-run gradient tape. Constructing a Tape makes it the active tape
/// of the calling thread until it is destroyed; operations on tensors that
/// require gradients are recorded while a tape is active. Without an active
/// tape, operations compute values only.
class Tape {
 public:
  Tape() : previous_(active_slot()) { active_slot() = this; }
  ~Tape() { active_slot() = previous_; }

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() noexcept { return active_slot(); }

  void record(std::shared_ptr<detail::Node> node) { nodes_.push_back(std::move(node)); }

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded backward rule once, in
  /// reverse recording order. Returns the number of rules executed.
  std::size_t backward(const Tensor& loss) {
    if (loss.size() != 1) fail(ErrorKind::kShape, "backward() requires a scalar loss");
    if (!loss.requires_grad()) fail(ErrorKind::kState, "loss does not depend on any parameter");
    loss.node()->ensure_grad();
    loss.node()->grad[0] += 1.0;
    std::size_t visited = 0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      detail::Node& node = **it;
      if (node.grad.empty() || !node.backward) continue;
      node.backward(node);
      ++visited;
    }
    return visited;
  }

  void clear() { nodes_.clear(); }

 private:
  static Tape*& active_slot() {
    thread_local Tape* slot = nullptr;
    return slot;
  }

  std::vector<std::shared_ptr<detail::Node>> nodes_;
  Tape* previous_;
};

namespace detail {

inline bool any_requires_grad(std::initializer_list<const Tensor*> inputs) {
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

/// Wraps freshly computed values as an operation result; records the backward
/// rule only when a tape is active and some input needs a gradient.
inline Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> values,
                          std::initializer_list<const Tensor*> inputs,
                          std::function<void(const Node&)> backward) {
  Tensor out(rows, cols, std::move(values));
  Tape* tape = Tape::active();
  if (tape != nullptr && any_requires_grad(inputs)) {
    out.set_requires_grad(true);
    out.node()->backward = std::move(backward);
    tape->record(out.node());
  }
  return out;
}

/// Gradient sink for an input: null when the input does not need a gradient.
inline std::vector<double>* grad_sink(const Tensor& t) {
  if (!t.requires_grad()) return nullptr;
  t.node()->ensure_grad();
  return &t.node()->grad;
}

}  // namespace detail

}  // namespace fairtab
