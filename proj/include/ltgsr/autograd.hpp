#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ltgsr/tensor.hpp"

/// Tape-free reverse-mode differentiation over Tensor values.
///
/// Every backward rule is written in terms of differentiable ops, so gradients can be
/// differentiated again when `create_graph` is set (needed for the gradient penalty,
/// which differentiates a norm of an input-gradient w.r.t. critic weights).
namespace ltgsr::ag {

struct Node;

class Var {
 public:
  Var() = default;
  /// Leaf variable.
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const;
  /// In-place access for leaves (optimizer updates, finite-difference probes).
  Tensor& mutable_value();
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  bool is_leaf() const;
  Node* node() const { return node_.get(); }

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;

  friend Var make_result(Tensor, std::vector<Var>, std::function<std::vector<Var>(const Var&)>);
};

using BackwardFn = std::function<std::vector<Var>(const Var& grad_out)>;

struct Node {
  Tensor value;
  bool requires_grad = false;
  std::vector<Var> inputs;
  /// One entry per input; an undefined Var means "no gradient for that input".
  BackwardFn backward;
};

bool grad_enabled();

/// Scoped switch for graph recording.
class GradModeGuard {
 public:
  explicit GradModeGuard(bool enabled);
  ~GradModeGuard();
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool previous_;
};

class NoGradGuard : public GradModeGuard {
 public:
  NoGradGuard() : GradModeGuard(false) {}
};

/// Wraps an op result. Records `backward` only when grad mode is on and some input
/// requires a gradient; otherwise the result is a constant.
Var make_result(Tensor value, std::vector<Var> inputs, BackwardFn backward);

/// Gradients of sum(output) w.r.t. each of `inputs`. Unreached inputs get zeros.
/// With `create_graph` the returned Vars are themselves differentiable.
std::vector<Var> grad(const Var& output, std::span<const Var> inputs, bool create_graph = false);

}  // namespace ltgsr::ag
