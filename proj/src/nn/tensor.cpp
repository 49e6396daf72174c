#include "agentsim/nn/tensor.hpp"

#include "agentsim/error.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

namespace agentsim::nn
{
namespace
{
thread_local bool g_grad_enabled = true;
}

void Node::ensure_grad()
{
  if (grad.size() != size()) {
    grad.assign(size(), 0.0);
  }
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad)
{
  return full(rows, cols, 0.0, requires_grad);
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value, bool requires_grad)
{
  auto node = std::make_shared<Node>();
  node->rows = rows;
  node->cols = cols;
  node->value.assign(rows * cols, value);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> values, bool requires_grad)
{
  require(values.size() == rows * cols, "Tensor::from: value count does not match shape");
  check_finite(values, "Tensor::from");
  auto node = std::make_shared<Node>();
  node->rows = rows;
  node->cols = cols;
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad)
{
  return from(1, 1, {value}, requires_grad);
}

double Tensor::item() const
{
  require(size() == 1, "Tensor::item on a non-scalar");
  return node_->value[0];
}

void Tensor::zero_grad()
{
  node_->grad.assign(node_->size(), 0.0);
}

Tensor Tensor::detach() const
{
  return from(rows(), cols(), node_->value, false);
}

void Tensor::backward() const
{
  require(size() == 1, "backward() requires a scalar");
  // Iterative post-order DFS gives a topological order.
  std::vector<Node *> order;
  std::unordered_set<Node *> seen;
  std::vector<std::pair<Node *, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto & [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node * parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node * n : order) {
    if (n->backward) {
      n->grad.assign(n->size(), 0.0);
    } else {
      n->ensure_grad();
    }
  }
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node * n = *it;
    if (n->backward) {
      n->backward(*n);
    }
  }
  for (Node * n : order) {
    if (!n->backward) {
      check_finite(n->grad, "backward");
    }
  }
}

bool grad_enabled() noexcept
{
  return g_grad_enabled;
}

NoGradGuard::NoGradGuard() noexcept : previous_(g_grad_enabled)
{
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard()
{
  g_grad_enabled = previous_;
}

void check_finite(std::span<const double> values, std::string_view op)
{
  for (const double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite value produced by " + std::string(op));
    }
  }
}

namespace detail
{
Tensor make_result(
  std::size_t rows, std::size_t cols, std::vector<double> values, std::string_view op,
  std::vector<NodePtr> parents, std::function<void(Node &)> backward)
{
  check_finite(values, op);
  auto node = std::make_shared<Node>();
  node->rows = rows;
  node->cols = cols;
  node->value = std::move(values);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto & p : parents) {
      any = any || p->requires_grad;
    }
    if (any) {
      node->requires_grad = true;
      node->parents = std::move(parents);
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}
}  // namespace detail
}  // namespace agentsim::nn
