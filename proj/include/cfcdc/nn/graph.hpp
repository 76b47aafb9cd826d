#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "cfcdc/nn/rng.hpp"
#include "cfcdc/nn/tensor.hpp"

namespace cfcdc::nn {

class Graph;

// Handle to a node in a Graph. Cheap to copy; only valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
};

// Reverse-mode autodiff tape. Nodes are appended in topological order, so
// backward is a single reverse sweep. One graph per forward pass; graphs are
// not shared between threads.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  Var scalar_constant(double v);
  // Repeated calls for the same parameter return the same node.
  Var param(const Parameter& p);

  const Matrix& value(int id) const { return nodes_[id].value; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }

  // Gradient buffer of a node, zero-initialized on first access.
  Matrix& grad(int id);

  // Low-level node creation used by ops. `backward` reads the node's own
  // gradient and pushes into its inputs' gradients.
  Var make(Matrix value, std::initializer_list<Var> inputs, std::function<void(int self)> backward);
  Var make(Matrix value, std::span<const Var> inputs, std::function<void(int self)> backward);

  // Seeds d(root)/d(root) = seed and accumulates parameter gradients into out.
  void backward(Var root, Gradients& out, double seed = 1.0);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(int)> backward;
    const Parameter* param = nullptr;
    bool needs_grad = false;
    bool has_grad = false;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

inline const Matrix& Var::value() const { return graph->value(id); }

// ---- ops -----------------------------------------------------------------

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var add_row(Var a, Var row);          // broadcast a 1xC row over every row of a
Var scale_rows(Var a, Var col);       // a(i, :) * col(i, 0)
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var tanh(Var a);
Var sigmoid(Var a);
Var gelu(Var a);
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var dropout(Var a, double rate, Rng* rng);  // identity when rng is null or rate == 0
Var embedding(Var table, std::span<const int> ids);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, Index start, Index count);
Var slice_rows(Var a, Index start, Index count);
Var element(Var a, Index r, Index c);  // 1x1
Var rowwise_dot(Var a, Var b);         // n x 1
Var sum_all(Var a);                    // 1x1
Var mean_all(Var a);                   // 1x1
Var log(Var a);
// s * m - c * (1 - m) for a constant binary mask m with the shape of s.
Var mask_scores(Var s, const Matrix& mask, double c);
// Weighted sum of 1x1 nodes.
Var weighted_sum(std::span<const Var> scalars, std::span<const double> weights);

// Probability floor: max(p, eps) renormalized per row.
Var prob_floor(Var p, double eps);
// -log p(0, label) for a 1xK distribution row.
Var nll(Var p, Index label);
// KL(p || q) for 1xK distributions, 1x1 result.
Var kl_div(Var p, Var q);

// Single-direction LSTM over the rows of x. Gate column order is (i, f, g, o).
// Output row t is the hidden state after consuming row t; when reverse is set
// the sequence is consumed from the last row to the first.
Var lstm(Var x, Var w_input, Var w_hidden, Var bias, bool reverse);

}  // namespace cfcdc::nn
