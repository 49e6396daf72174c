#ifndef AGENTSIM__NN__TENSOR_HPP_
#define AGENTSIM__NN__TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace agentsim::nn
{
struct Node;
using NodePtr = std::shared_ptr<Node>;

/// Graph node: value, optional gradient and the rule that pushes the gradient to parents.
struct Node
{
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node &)> backward;

  std::size_t size() const noexcept { return rows * cols; }
  void ensure_grad();
};

/**
 * @brief Row-major 2-D float64 tensor with reverse-mode gradients.
 *
 * A Tensor is a cheap handle to a shared node. Vectors are 1 x n rows and
 * scalars are 1 x 1. Operations record their inputs only when gradient
 * recording is enabled on the calling thread and at least one input requires
 * a gradient.
 */
class Tensor
{
public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor full(std::size_t rows, std::size_t cols, double value, bool requires_grad = false);
  static Tensor from(
    std::size_t rows, std::size_t cols, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  std::vector<std::size_t> shape() const { return {rows(), cols()}; }
  std::size_t rows() const noexcept { return node_->rows; }
  std::size_t cols() const noexcept { return node_->cols; }
  std::size_t size() const noexcept { return node_->size(); }

  std::span<const double> data() const noexcept { return node_->value; }
  std::span<double> mutable_data() noexcept { return node_->value; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  double item() const;

  bool requires_grad() const noexcept { return node_->requires_grad; }
  bool has_grad() const noexcept { return !node_->grad.empty(); }
  std::span<const double> grad() const noexcept { return node_->grad; }
  std::span<double> mutable_grad() noexcept { return node_->grad; }
  void zero_grad();

  /// Reverse-mode sweep from this 1 x 1 tensor.
  void backward() const;

  /// Same values, no history.
  Tensor detach() const;

  const NodePtr & node() const noexcept { return node_; }

private:
  NodePtr node_;
};

/// True unless a NoGradGuard is alive on this thread.
bool grad_enabled() noexcept;

class NoGradGuard
{
public:
  NoGradGuard() noexcept;
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard & operator=(const NoGradGuard &) = delete;

private:
  bool previous_;
};

/// Throws NumericError naming `op` if any value is NaN or Inf.
void check_finite(std::span<const double> values, std::string_view op);

namespace detail
{
/// Builds an op result; history is attached only when needed.
Tensor make_result(
  std::size_t rows, std::size_t cols, std::vector<double> values, std::string_view op,
  std::vector<NodePtr> parents, std::function<void(Node &)> backward);
}  // namespace detail
}  // namespace agentsim::nn

#endif  // AGENTSIM__NN__TENSOR_HPP_
