#include "licb/tensor.hpp"

#include <algorithm>
#include <unordered_set>

namespace licb::diff {

Tensor Tensor::zeros(const ShapeVec& shape, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value.assign(shape_numel(shape), 0.0f);
  n->requires_grad = requires_grad;
  if (requires_grad) n->ensure_grad();
  return Tensor(n);
}

Tensor Tensor::full(const ShapeVec& shape, float v, bool requires_grad) {
  Tensor t = zeros(shape, requires_grad);
  std::fill(t.n_->value.begin(), t.n_->value.end(), v);
  return t;
}

Tensor Tensor::from_data(const ShapeVec& shape, std::vector<float> data,
                         bool requires_grad) {
  if (data.size() != shape_numel(shape))
    throw TensorError("from_data: size mismatch for shape " + shape_str(shape));
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  if (requires_grad) n->ensure_grad();
  return Tensor(n);
}

Tensor Tensor::scalar(double v) {
  Tensor t = from_data({}, {static_cast<float>(v)});
  t.node()->scalar_acc = v;
  return t;
}

Graph Graph::trace(const Tensor& root) {
  Graph g;
  g.root = root;
  // iterative post-order DFS over parents
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx].get();
      ++idx;
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      g.topo.push_back(node);
      stack.pop_back();
    }
  }
  return g;
}

void backward(Graph& g) {
  Node* root = g.root.node();
  if (root->value.size() != 1)
    throw TensorError("backward: root must be scalar, got shape " +
                      shape_str(root->shape));
  if (root->backward_done)
    throw TensorError("backward: already called on this graph; rebuild it");
  root->backward_done = true;
  root->ensure_grad();
  root->grad[0] = 1.0f;
  // topo holds parents before children; sweep children-first
  for (auto it = g.topo.rbegin(); it != g.topo.rend(); ++it) {
    Node* n = *it;
    if (!n->backprop) continue;
    if (n->grad.empty()) continue;  // unreachable from root
    n->backprop(*n);
  }
}

void backward(const Tensor& root) {
  Graph g = Graph::trace(root);
  backward(g);
}

}  // namespace licb::diff
