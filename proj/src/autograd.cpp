#include "ltgsr/autograd.hpp"

#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "ltgsr/errors.hpp"
#include "ltgsr/ops.hpp"

namespace ltgsr::ag {
namespace {
thread_local bool t_grad_enabled = true;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

const Tensor& Var::value() const {
  if (!node_) throw InvalidArgument("access to undefined Var");
  return node_->value;
}

Tensor& Var::mutable_value() {
  if (!node_) throw InvalidArgument("access to undefined Var");
  if (node_->backward) throw InvalidArgument("mutable_value() on a non-leaf Var");
  return node_->value;
}

bool Var::requires_grad() const { return node_ && node_->requires_grad; }

bool Var::is_leaf() const { return node_ && !node_->backward; }

bool grad_enabled() { return t_grad_enabled; }

GradModeGuard::GradModeGuard(bool enabled) : previous_(t_grad_enabled) { t_grad_enabled = enabled; }

GradModeGuard::~GradModeGuard() { t_grad_enabled = previous_; }

Var make_result(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  if (t_grad_enabled) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

std::vector<Var> grad(const Var& output, std::span<const Var> inputs, bool create_graph) {
  std::vector<Var> result(inputs.size());
  if (!output.requires_grad()) {
    for (std::size_t i = 0; i < inputs.size(); ++i) result[i] = Var(Tensor(inputs[i].shape()));
    return result;
  }

  // Post-order over the recorded graph.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{output.node(), 0}};
  visited.insert(output.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].node();
      if (child && child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  std::unordered_set<Node*> wanted;
  for (const auto& in : inputs) wanted.insert(in.node());

  GradModeGuard mode(create_graph);
  std::unordered_map<Node*, Var> grads;
  grads.emplace(output.node(), Var(Tensor(output.shape(), 1.0)));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    auto found = grads.find(node);
    if (found == grads.end()) continue;
    if (!node->backward) continue;
    Var g = found->second;
    if (!wanted.contains(node)) grads.erase(found);
    std::vector<Var> parts = node->backward(g);
    for (std::size_t k = 0; k < node->inputs.size() && k < parts.size(); ++k) {
      const Var& in = node->inputs[k];
      if (!parts[k].defined() || !in.requires_grad()) continue;
      auto [slot, inserted] = grads.try_emplace(in.node(), parts[k]);
      if (!inserted) slot->second = add(slot->second, parts[k]);
    }
  }

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto found = grads.find(inputs[i].node());
    result[i] = found != grads.end() ? found->second : Var(Tensor(inputs[i].shape()));
  }
  return result;
}

}  // namespace ltgsr::ag
