#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "licb/util.hpp"

namespace licb::diff {

using ShapeVec = std::vector<int>;

inline size_t shape_numel(const ShapeVec& s) {
  size_t n = 1;
  for (int d : s) n *= static_cast<size_t>(d);
  return n;
}

inline std::string shape_str(const ShapeVec& s) {
  std::string r = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) r += ",";
    r += std::to_string(s[i]);
  }
  return r + ")";
}

class TensorError : public std::runtime_error {
 public:
  explicit TensorError(const std::string& m) : std::runtime_error(m) {}
};

// Raised when a forward op produces NaN/Inf. Carries the op name so failures
// can be reported with layer provenance.
class NonFiniteError : public TensorError {
 public:
  NonFiniteError(const std::string& op, const std::string& where)
      : TensorError("non-finite value produced by op '" + op + "'" +
                    (where.empty() ? "" : " in " + where)),
        op_name(op) {}
  std::string op_name;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  ShapeVec shape;
  std::vector<float> value;
  std::vector<float> grad;  // allocated on demand, zero-filled
  bool requires_grad = false;
  bool backward_done = false;
  // double-precision value for rank-0 reduction results
  double scalar_acc = std::numeric_limits<double>::quiet_NaN();
  const char* op = "leaf";
  std::vector<NodePtr> parents;
  // accumulates d(root)/d(parent) into parents' grad buffers, reading this->grad
  std::function<void(Node&)> backprop;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0f);
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr n) : n_(std::move(n)) {}

  static Tensor zeros(const ShapeVec& shape, bool requires_grad = false);
  static Tensor full(const ShapeVec& shape, float v, bool requires_grad = false);
  static Tensor from_data(const ShapeVec& shape, std::vector<float> data,
                          bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return n_ != nullptr; }
  const ShapeVec& shape() const { return n_->shape; }
  size_t numel() const { return n_->value.size(); }
  bool requires_grad() const { return n_->requires_grad; }

  std::span<const float> data() const { return n_->value; }
  std::span<float> mutable_data() { return n_->value; }
  std::span<const float> grad() const { return n_->grad; }

  void set_requires_grad(bool f) {
    n_->requires_grad = f;
    if (f) n_->ensure_grad();
  }
  void zero_grad() {
    if (!n_->grad.empty()) std::fill(n_->grad.begin(), n_->grad.end(), 0.0f);
  }

  // value as double; exact for reduction roots which carry a double accumulator
  double scalar_value() const {
    if (numel() != 1) throw TensorError("scalar_value on non-scalar tensor");
    if (!std::isnan(n_->scalar_acc)) return n_->scalar_acc;
    return static_cast<double>(n_->value[0]);
  }

  Node* node() const { return n_.get(); }
  const NodePtr& node_ptr() const { return n_; }

  // detached copy: same values, fresh leaf
  Tensor detach() const {
    return from_data(shape(), std::vector<float>(n_->value.begin(), n_->value.end()));
  }

 private:
  NodePtr n_;
};

// The recorded computation graph for one backward pass: nodes in topological
// order, root last.
struct Graph {
  std::vector<Node*> topo;
  Tensor root;
  static Graph trace(const Tensor& root);
};

// Reverse-mode sweep. root must be scalar; throws if backward already ran on
// this root. Disconnected requires_grad leaves keep zero gradients.
void backward(const Tensor& root);
void backward(Graph& g);

}  // namespace licb::diff
