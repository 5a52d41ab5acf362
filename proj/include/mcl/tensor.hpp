#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mcl {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

std::string shape_str(const std::vector<int>& shape);

// Dense row-major tensor of 64-bit floats. Data is shared between
// copies; ops never mutate their inputs. A tensor is bound to a Graph
// when it was produced by an op on that graph or registered via
// Graph::leaf.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> values);
  static Tensor scalar(double v);

  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return data_ ? data_->size() : 0; }
  double* data() { return data_->data(); }
  const double* data() const { return data_->data(); }
  std::vector<double>& vec() { return *data_; }
  const std::vector<double>& vec() const { return *data_; }
  double item() const;
  int node() const { return node_; }
  bool defined() const { return static_cast<bool>(data_); }
  bool finite() const;

  // Deep copy, detached from any graph.
  Tensor clone() const;

 private:
  std::vector<int> shape_;
  std::shared_ptr<std::vector<double>> data_;
  int node_ = -1;
  friend class Graph;
};

// Reverse-mode tape. Append-only; parents always precede children.
// One backward pass per graph: a second call is an error.
class Graph {
 public:
  // Register a detached tensor (parameter or input) as a differentiable
  // leaf. Binding the same storage twice yields the same node.
  Tensor leaf(const Tensor& t);

  // Run backprop from a scalar root. Gradients are then available via
  // grad_of. Leaves that do not participate get zero gradients.
  void backward(const Tensor& root);

  // Gradient of the root w.r.t. a tensor registered on this graph.
  // Tensors unknown to the graph yield zeros of matching shape.
  Tensor grad_of(const Tensor& t) const;

  bool consumed() const { return consumed_; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // -- used by op implementations --
  // A back fn receives the incoming gradient of its own node and
  // accumulates into parent gradients via grad().
  using BackFn = std::function<void(Graph&, const std::vector<double>&)>;
  int add_node(std::vector<int> shape, BackFn back);
  std::vector<double>& grad(int node);
  Tensor attach(Tensor t, int node) {
    t.node_ = node;
    return t;
  }

 private:
  struct Node {
    std::vector<int> shape;
    BackFn back;
  };
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  std::unordered_map<const void*, int> leaf_of_;
  bool consumed_ = false;
};

enum class Mode { kTrain, kEval };

// Throws Error naming `op` if any value is NaN or Inf.
void check_finite(const char* op, const Tensor& t);

namespace ops {

// a [m x k] * b [k x n] -> [m x n]
Tensor matmul(Graph& g, const Tensor& a, const Tensor& b);

// Elementwise add; also broadcasts b over a's leading axis
// (a [m x n] + b [n]).
Tensor add(Graph& g, const Tensor& a, const Tensor& b);

// Elementwise multiply, equal shapes.
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);

Tensor relu(Graph& g, const Tensor& x);
Tensor tanh(Graph& g, const Tensor& x);
Tensor scale(Graph& g, const Tensor& x, double c);

// Mean over one axis of an n-d tensor.
Tensor mean_axis(Graph& g, const Tensor& x, int axis);

// Rows of `table` [vocab x dim] selected by `ids`; output shape is
// prefix_shape + [dim] where product(prefix_shape) == ids.size().
Tensor embedding_lookup(Graph& g, const Tensor& table,
                        const std::vector<int>& ids,
                        std::vector<int> prefix_shape);

// x [b x len x dim], mask [b x len] of 0/1 -> [b x dim]. Rows whose
// mask is all zero pool to zeros. The mask is a constant.
Tensor masked_mean_pool(Graph& g, const Tensor& x,
                        const std::vector<double>& mask);

// Mean over the batch of -log softmax(logits)[label]. logits [b x C].
Tensor softmax_cross_entropy(Graph& g, const Tensor& logits,
                             const std::vector<int>& labels);

// Mean squared error over all elements; target is a constant.
Tensor mse(Graph& g, const Tensor& pred, const Tensor& target);

// Inverted dropout keyed by a counter-based rng key; identity in eval
// mode (same tensor, bit for bit).
Tensor dropout(Graph& g, const Tensor& x, double rate, std::uint64_t key,
               Mode mode);

} // namespace ops

} // namespace mcl
