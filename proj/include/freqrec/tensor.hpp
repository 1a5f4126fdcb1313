#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace freqrec {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct TensorImpl;

// One recorded operation. The backward rule receives the gradient of the
// node's output and accumulates into the inputs that require gradients.
struct Node {
  using BackwardFn = std::function<void(std::span<const double> out_grad)>;

  const char* op = "";
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  BackwardFn backward;
  bool consumed = false;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient is written
  bool requires_grad = false;
  std::shared_ptr<Node> creator;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

// Dense row-major array of doubles with an optional gradient slot.
//
// Tensor is a shared handle: copies alias the same storage, which is how
// parameters are threaded through the recorded graph. Operations that
// involve at least one tensor with requires_grad() record a node so that
// backward() can propagate adjoints.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->data.size(); }
  // Extent of `axis`; negative values count from the back.
  std::size_t extent(int axis) const;

  std::span<const double> data() const { return impl_->data; }
  // Writes bypass the graph; only meant for leaves (parameter updates,
  // finite-difference probes).
  std::span<double> mutable_data() { return impl_->data; }
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool value) { impl_->requires_grad = value; }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  std::span<double> mutable_grad() { return impl_->ensure_grad(); }
  void zero_grad() { impl_->grad.clear(); }
  bool is_leaf() const { return impl_->creator == nullptr; }

  // Same values, no history, no gradient requirement.
  Tensor detach() const;
  Tensor clone() const;

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

// Runs reverse-mode differentiation from a scalar loss. Every leaf with
// requires_grad() reachable from the loss has its gradient accumulated.
// The recorded graph is consumed; calling backward() again on the same
// graph throws UsageError.
void backward(const Tensor& loss);

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

namespace detail {

// Builds an op output and records a node when any input requires a
// gradient and recording is enabled.
Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   std::vector<Tensor> inputs, Node::BackwardFn backward);

}  // namespace detail

}  // namespace freqrec
