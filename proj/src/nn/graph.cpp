#include "cfcdc/nn/graph.hpp"

#include <cmath>

#include "cfcdc/error.hpp"

namespace cfcdc::nn {

Var Graph::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Graph::scalar_constant(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Var Graph::param(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{this, it->second};
  Node n;
  n.value = p.value();
  n.param = &p;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return Var{this, id};
}

Matrix& Graph::grad(int id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

Var Graph::make(Matrix value, std::initializer_list<Var> inputs, std::function<void(int)> backward) {
  return make(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Graph::make(Matrix value, std::span<const Var> inputs, std::function<void(int)> backward) {
  Node n;
  n.value = std::move(value);
  for (const Var& v : inputs) {
    if (nodes_[v.id].needs_grad) {
      n.needs_grad = true;
      break;
    }
  }
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

void Graph::backward(Var root, Gradients& out, double seed) {
  if (root.graph != this) throw InputError("backward: root belongs to another graph");
  if (!nodes_[root.id].needs_grad) return;
  grad(root.id).array() += seed;
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.has_grad) continue;
    if (n.backward) n.backward(id);
    if (n.param != nullptr) out.accumulate(n.param, n.grad);
  }
}

// ---- ops -----------------------------------------------------------------

namespace {

// libm tanh is scalar and slow; this form vectorizes through Eigen's exp.
// Absolute error stays near machine epsilon.
template <typename D>
typename D::PlainObject fast_tanh(const Eigen::ArrayBase<D>& x) {
  const typename D::PlainObject t = (-2.0 * x.abs()).exp();
  return x.sign() * (1.0 - t) / (1.0 + t);
}

using RowArray = Eigen::Array<double, 1, Eigen::Dynamic>;

Graph& G(Var v) { return *v.graph; }

bool want(Var v) { return v.graph->needs_grad(v.id); }

void check_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InputError(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw InputError("matmul: inner dimension mismatch");
  Graph& g = G(a);
  Matrix out = a.value() * b.value();
  return g.make(std::move(out), {a, b}, [&g, a, b](int self) {
    const Matrix& d = g.grad(self);
    if (want(a)) g.grad(a.id).noalias() += d * g.value(b.id).transpose();
    if (want(b)) g.grad(b.id).noalias() += g.value(a.id).transpose() * d;
  });
}

Var matmul_nt(Var a, Var b) {
  if (a.cols() != b.cols()) throw InputError("matmul_nt: inner dimension mismatch");
  Graph& g = G(a);
  Matrix out = a.value() * b.value().transpose();
  return g.make(std::move(out), {a, b}, [&g, a, b](int self) {
    const Matrix& d = g.grad(self);
    if (want(a)) g.grad(a.id).noalias() += d * g.value(b.id);
    if (want(b)) g.grad(b.id).noalias() += d.transpose() * g.value(a.id);
  });
}

Var transpose(Var a) {
  Graph& g = G(a);
  Matrix out = a.value().transpose();
  return g.make(std::move(out), {a}, [&g, a](int self) { g.grad(a.id) += g.grad(self).transpose(); });
}

Var add(Var a, Var b) {
  check_same_shape(a, b, "add");
  Graph& g = G(a);
  Matrix out = a.value() + b.value();
  return g.make(std::move(out), {a, b}, [&g, a, b](int self) {
    if (want(a)) g.grad(a.id) += g.grad(self);
    if (want(b)) g.grad(b.id) += g.grad(self);
  });
}

Var sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  Graph& g = G(a);
  Matrix out = a.value() - b.value();
  return g.make(std::move(out), {a, b}, [&g, a, b](int self) {
    if (want(a)) g.grad(a.id) += g.grad(self);
    if (want(b)) g.grad(b.id) -= g.grad(self);
  });
}

Var mul(Var a, Var b) {
  check_same_shape(a, b, "mul");
  Graph& g = G(a);
  Matrix out = a.value().cwiseProduct(b.value());
  return g.make(std::move(out), {a, b}, [&g, a, b](int self) {
    const Matrix& d = g.grad(self);
    if (want(a)) g.grad(a.id) += d.cwiseProduct(g.value(b.id));
    if (want(b)) g.grad(b.id) += d.cwiseProduct(g.value(a.id));
  });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw InputError("add_row: shape mismatch");
  Graph& g = G(a);
  Matrix out = a.value().rowwise() + row.value().row(0);
  return g.make(std::move(out), {a, row}, [&g, a, row](int self) {
    const Matrix& d = g.grad(self);
    if (want(a)) g.grad(a.id) += d;
    if (want(row)) g.grad(row.id) += d.colwise().sum();
  });
}

Var scale_rows(Var a, Var col) {
  if (col.cols() != 1 || col.rows() != a.rows()) throw InputError("scale_rows: shape mismatch");
  Graph& g = G(a);
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return g.make(std::move(out), {a, col}, [&g, a, col](int self) {
    const Matrix& d = g.grad(self);
    if (want(a)) g.grad(a.id).array() += d.array().colwise() * g.value(col.id).col(0).array();
    if (want(col)) g.grad(col.id).col(0) += d.cwiseProduct(g.value(a.id)).rowwise().sum();
  });
}

Var scale(Var a, double s) {
  Graph& g = G(a);
  Matrix out = a.value() * s;
  return g.make(std::move(out), {a}, [&g, a, s](int self) { g.grad(a.id) += g.grad(self) * s; });
}

Var add_scalar(Var a, double s) {
  Graph& g = G(a);
  Matrix out = a.value().array() + s;
  return g.make(std::move(out), {a}, [&g, a](int self) { g.grad(a.id) += g.grad(self); });
}

Var tanh(Var a) {
  Graph& g = G(a);
  Matrix out = fast_tanh(a.value().array());
  return g.make(std::move(out), {a}, [&g, a](int self) {
    const Matrix& y = g.value(self);
    g.grad(a.id).array() += g.grad(self).array() * (1.0 - y.array().square());
  });
}

Var sigmoid(Var a) {
  Graph& g = G(a);
  Matrix out = (1.0 + (-a.value().array()).exp()).inverse();
  return g.make(std::move(out), {a}, [&g, a](int self) {
    const Matrix& y = g.value(self);
    g.grad(a.id).array() += g.grad(self).array() * y.array() * (1.0 - y.array());
  });
}

namespace {
constexpr double kGeluK = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC = 0.044715;
}  // namespace

Var gelu(Var a) {
  Graph& g = G(a);
  const auto& x = a.value().array();
  Matrix out = 0.5 * x * (1.0 + fast_tanh(kGeluK * (x + kGeluC * x.cube())));
  return g.make(std::move(out), {a}, [&g, a](int self) {
    const auto& x = g.value(a.id).array();
    const auto t = fast_tanh((kGeluK * (x + kGeluC * x.cube())).eval());
    const auto dydx = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t.square()) * kGeluK * (1.0 + 3.0 * kGeluC * x.square());
    g.grad(a.id).array() += g.grad(self).array() * dydx;
  });
}

Var softmax_rows(Var a) {
  Graph& g = G(a);
  Matrix out = a.value();
  for (Index r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return g.make(std::move(out), {a}, [&g, a](int self) {
    const Matrix& y = g.value(self);
    const Matrix& d = g.grad(self);
    const Eigen::VectorXd dot = d.cwiseProduct(y).rowwise().sum();
    g.grad(a.id).array() += y.array() * (d.array().colwise() - dot.array());
  });
}

Var log_softmax_rows(Var a) {
  Graph& g = G(a);
  Matrix out = a.value();
  for (Index r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    row.array() -= lse;
  }
  return g.make(std::move(out), {a}, [&g, a](int self) {
    const Matrix& y = g.value(self);
    const Matrix& d = g.grad(self);
    const Eigen::VectorXd total = d.rowwise().sum();
    g.grad(a.id).array() += d.array() - y.array().exp().colwise() * total.array();
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  if (gamma.rows() != 1 || gamma.cols() != x.cols() || beta.rows() != 1 || beta.cols() != x.cols()) {
    throw InputError("layer_norm: parameter shape mismatch");
  }
  Graph& g = G(x);
  const Index n = x.rows();
  const Index d = x.cols();
  Matrix xhat(n, d);
  Eigen::VectorXd inv_std(n);
  for (Index r = 0; r < n; ++r) {
    const auto row = x.value().row(r);
    const double mu = row.mean();
    const double var = (row.array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (row.array() - mu) * inv_std(r);
  }
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() + beta.value().row(0).array();
  return g.make(std::move(out), {x, gamma, beta},
                [&g, x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](int self) {
                  const Matrix& dy = g.grad(self);
                  if (want(gamma)) g.grad(gamma.id) += dy.cwiseProduct(xhat).colwise().sum();
                  if (want(beta)) g.grad(beta.id) += dy.colwise().sum();
                  if (want(x)) {
                    const Matrix dxhat = dy.array().rowwise() * g.value(gamma.id).row(0).array();
                    Matrix& dx = g.grad(x.id);
                    for (Index r = 0; r < dxhat.rows(); ++r) {
                      const double m1 = dxhat.row(r).mean();
                      const double m2 = dxhat.row(r).dot(xhat.row(r)) / static_cast<double>(dxhat.cols());
                      dx.row(r).array() += inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
                    }
                  }
                });
}

Var dropout(Var a, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return a;
  if (rate >= 1.0) throw InputError("dropout: rate must be < 1");
  Graph& g = G(a);
  const double keep_scale = 1.0 / (1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng->uniform() < rate ? 0.0 : keep_scale;
  Matrix out = a.value().cwiseProduct(mask);
  return g.make(std::move(out), {a}, [&g, a, mask = std::move(mask)](int self) {
    g.grad(a.id) += g.grad(self).cwiseProduct(mask);
  });
}

Var embedding(Var table, std::span<const int> ids) {
  Graph& g = G(table);
  const Matrix& t = table.value();
  Matrix out(static_cast<Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) throw InputError("embedding: id out of range");
    out.row(static_cast<Index>(i)) = t.row(ids[i]);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  return g.make(std::move(out), {table}, [&g, table, idv = std::move(idv)](int self) {
    const Matrix& d = g.grad(self);
    Matrix& dt = g.grad(table.id);
    for (std::size_t i = 0; i < idv.size(); ++i) dt.row(idv[i]) += d.row(static_cast<Index>(i));
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw InputError("concat_cols: no inputs");
  Graph& g = G(parts[0]);
  const Index rows = parts[0].rows();
  Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw InputError("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index off = 0;
  for (const Var& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  std::vector<Var> pv(parts.begin(), parts.end());
  return g.make(std::move(out), parts, [&g, pv = std::move(pv)](int self) {
    const Matrix& d = g.grad(self);
    Index off = 0;
    for (const Var& p : pv) {
      if (want(p)) g.grad(p.id) += d.middleCols(off, p.cols());
      off += p.cols();
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw InputError("concat_rows: no inputs");
  Graph& g = G(parts[0]);
  const Index cols = parts[0].cols();
  Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw InputError("concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Index off = 0;
  for (const Var& p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  std::vector<Var> pv(parts.begin(), parts.end());
  return g.make(std::move(out), parts, [&g, pv = std::move(pv)](int self) {
    const Matrix& d = g.grad(self);
    Index off = 0;
    for (const Var& p : pv) {
      if (want(p)) g.grad(p.id) += d.middleRows(off, p.rows());
      off += p.rows();
    }
  });
}

Var slice_cols(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw InputError("slice_cols: out of range");
  Graph& g = G(a);
  Matrix out = a.value().middleCols(start, count);
  return g.make(std::move(out), {a}, [&g, a, start, count](int self) {
    g.grad(a.id).middleCols(start, count) += g.grad(self);
  });
}

Var slice_rows(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw InputError("slice_rows: out of range");
  Graph& g = G(a);
  Matrix out = a.value().middleRows(start, count);
  return g.make(std::move(out), {a}, [&g, a, start, count](int self) {
    g.grad(a.id).middleRows(start, count) += g.grad(self);
  });
}

Var element(Var a, Index r, Index c) {
  if (r < 0 || r >= a.rows() || c < 0 || c >= a.cols()) throw InputError("element: out of range");
  Graph& g = G(a);
  Matrix out(1, 1);
  out(0, 0) = a.value()(r, c);
  return g.make(std::move(out), {a}, [&g, a, r, c](int self) { g.grad(a.id)(r, c) += g.grad(self)(0, 0); });
}

Var rowwise_dot(Var a, Var b) {
  check_same_shape(a, b, "rowwise_dot");
  Graph& g = G(a);
  Matrix out = a.value().cwiseProduct(b.value()).rowwise().sum();
  return g.make(std::move(out), {a, b}, [&g, a, b](int self) {
    const auto d = g.grad(self).col(0).array();
    if (want(a)) g.grad(a.id).array() += g.value(b.id).array().colwise() * d;
    if (want(b)) g.grad(b.id).array() += g.value(a.id).array().colwise() * d;
  });
}

Var sum_all(Var a) {
  Graph& g = G(a);
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return g.make(std::move(out), {a}, [&g, a](int self) { g.grad(a.id).array() += g.grad(self)(0, 0); });
}

Var mean_all(Var a) {
  Graph& g = G(a);
  const double n = static_cast<double>(a.value().size());
  Matrix out(1, 1);
  out(0, 0) = a.value().sum() / n;
  return g.make(std::move(out), {a}, [&g, a, n](int self) { g.grad(a.id).array() += g.grad(self)(0, 0) / n; });
}

Var log(Var a) {
  Graph& g = G(a);
  Matrix out = a.value().array().log();
  return g.make(std::move(out), {a}, [&g, a](int self) {
    g.grad(a.id).array() += g.grad(self).array() / g.value(a.id).array();
  });
}

Var mask_scores(Var s, const Matrix& mask, double c) {
  if (mask.rows() != s.rows() || mask.cols() != s.cols()) throw InputError("mask_scores: shape mismatch");
  Graph& g = G(s);
  Matrix out = s.value().cwiseProduct(mask) - (c * (1.0 - mask.array())).matrix();
  return g.make(std::move(out), {s}, [&g, s, mask](int self) { g.grad(s.id) += g.grad(self).cwiseProduct(mask); });
}

Var weighted_sum(std::span<const Var> scalars, std::span<const double> weights) {
  if (scalars.empty() || scalars.size() != weights.size()) throw InputError("weighted_sum: size mismatch");
  Graph& g = G(scalars[0]);
  Matrix out = Matrix::Zero(1, 1);
  for (std::size_t i = 0; i < scalars.size(); ++i) out(0, 0) += weights[i] * scalars[i].scalar();
  std::vector<Var> sv(scalars.begin(), scalars.end());
  std::vector<double> wv(weights.begin(), weights.end());
  return g.make(std::move(out), scalars, [&g, sv = std::move(sv), wv = std::move(wv)](int self) {
    const double d = g.grad(self)(0, 0);
    for (std::size_t i = 0; i < sv.size(); ++i) {
      if (want(sv[i])) g.grad(sv[i].id)(0, 0) += d * wv[i];
    }
  });
}

Var prob_floor(Var p, double eps) {
  Graph& g = G(p);
  Matrix clipped = p.value().cwiseMax(eps);
  const Eigen::VectorXd z = clipped.rowwise().sum();
  Matrix out = clipped.array().colwise() / z.array();
  return g.make(std::move(out), {p}, [&g, p, eps, z](int self) {
    const Matrix& y = g.value(self);
    const Matrix& d = g.grad(self);
    const Eigen::VectorXd dot = d.cwiseProduct(y).rowwise().sum();
    Matrix dq = (d.array().colwise() - dot.array()).colwise() / z.array();
    const Matrix& pv = g.value(p.id);
    for (Index i = 0; i < dq.size(); ++i) {
      if (pv.data()[i] < eps) dq.data()[i] = 0.0;
    }
    g.grad(p.id) += dq;
  });
}

Var nll(Var p, Index label) {
  if (p.rows() != 1 || label < 0 || label >= p.cols()) throw InputError("nll: label out of range");
  Graph& g = G(p);
  Matrix out(1, 1);
  out(0, 0) = -std::log(p.value()(0, label));
  return g.make(std::move(out), {p}, [&g, p, label](int self) {
    g.grad(p.id)(0, label) -= g.grad(self)(0, 0) / g.value(p.id)(0, label);
  });
}

Var kl_div(Var p, Var q) {
  check_same_shape(p, q, "kl_div");
  if (p.rows() != 1) throw InputError("kl_div: expects a single distribution row");
  Graph& g = G(p);
  Matrix out(1, 1);
  out(0, 0) = (p.value().array() * (p.value().array() / q.value().array()).log()).sum();
  return g.make(std::move(out), {p, q}, [&g, p, q](int self) {
    const double d = g.grad(self)(0, 0);
    const auto pa = g.value(p.id).array();
    const auto qa = g.value(q.id).array();
    if (want(p)) g.grad(p.id).array() += d * ((pa / qa).log() + 1.0);
    if (want(q)) g.grad(q.id).array() -= d * (pa / qa);
  });
}

Var lstm(Var x, Var w_input, Var w_hidden, Var bias, bool reverse) {
  const Index n = x.rows();
  const Index hdim = w_hidden.rows();
  if (w_input.rows() != x.cols() || w_input.cols() != 4 * hdim || w_hidden.cols() != 4 * hdim ||
      bias.rows() != 1 || bias.cols() != 4 * hdim) {
    throw InputError("lstm: parameter shape mismatch");
  }
  Graph& g = G(x);
  Matrix pre = (x.value() * w_input.value()).rowwise() + bias.value().row(0);
  Matrix gates(n, 4 * hdim);  // activated i, f, g, o
  Matrix cells(n, hdim);
  Matrix h_prev_rows = Matrix::Zero(n, hdim);
  Matrix out(n, hdim);
  Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(hdim);
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(hdim);
  const Matrix& wh = w_hidden.value();
  for (Index k = 0; k < n; ++k) {
    const Index t = reverse ? n - 1 - k : k;
    h_prev_rows.row(t) = h;
    Eigen::RowVectorXd a = pre.row(t) + h * wh;
    auto ga = gates.row(t);
    ga.segment(0, hdim) = (1.0 + (-a.segment(0, hdim).array()).exp()).inverse();
    ga.segment(hdim, hdim) = (1.0 + (-a.segment(hdim, hdim).array()).exp()).inverse();
    ga.segment(2 * hdim, hdim) = fast_tanh(a.segment(2 * hdim, hdim).array());
    ga.segment(3 * hdim, hdim) = (1.0 + (-a.segment(3 * hdim, hdim).array()).exp()).inverse();
    c = ga.segment(hdim, hdim).cwiseProduct(c) + ga.segment(0, hdim).cwiseProduct(ga.segment(2 * hdim, hdim));
    h = ga.segment(3 * hdim, hdim).array() * fast_tanh(c.array());
    cells.row(t) = c;
    out.row(t) = h;
  }
  return g.make(std::move(out), {x, w_input, w_hidden, bias},
                [&g, x, w_input, w_hidden, bias, reverse, hdim, gates = std::move(gates),
                 cells = std::move(cells), h_prev_rows = std::move(h_prev_rows)](int self) {
                  const Index n = gates.rows();
                  const Matrix& dout = g.grad(self);
                  const Matrix& wh = g.value(w_hidden.id);
                  Matrix dpre(n, 4 * hdim);
                  Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(hdim);
                  Eigen::RowVectorXd dc_next = Eigen::RowVectorXd::Zero(hdim);
                  for (Index k = n - 1; k >= 0; --k) {
                    const Index t = reverse ? n - 1 - k : k;
                    const Index prev = reverse ? t + 1 : t - 1;
                    const auto ga = gates.row(t);
                    const auto i = ga.segment(0, hdim).array();
                    const auto f = ga.segment(hdim, hdim).array();
                    const auto gg = ga.segment(2 * hdim, hdim).array();
                    const auto o = ga.segment(3 * hdim, hdim).array();
                    const RowArray tc = fast_tanh(cells.row(t).array());
                    const RowArray dh = (dout.row(t) + dh_next).array();
                    const RowArray dc = dh * o * (1.0 - tc.square()) + dc_next.array();
                    RowArray c_prev = RowArray::Zero(hdim);
                    if (k > 0) c_prev = cells.row(prev).array();
                    auto dr = dpre.row(t);
                    dr.segment(0, hdim) = (dc * gg * i * (1.0 - i)).matrix();
                    dr.segment(hdim, hdim) = (dc * c_prev * f * (1.0 - f)).matrix();
                    dr.segment(2 * hdim, hdim) = (dc * i * (1.0 - gg.square())).matrix();
                    dr.segment(3 * hdim, hdim) = (dh * tc * o * (1.0 - o)).matrix();
                    dc_next = (dc * f).matrix();
                    dh_next.noalias() = dr * wh.transpose();
                  }
                  if (want(x)) g.grad(x.id).noalias() += dpre * g.value(w_input.id).transpose();
                  if (want(w_input)) g.grad(w_input.id).noalias() += g.value(x.id).transpose() * dpre;
                  if (want(w_hidden)) g.grad(w_hidden.id).noalias() += h_prev_rows.transpose() * dpre;
                  if (want(bias)) g.grad(bias.id) += dpre.colwise().sum();
                });
}

}  // namespace cfcdc::nn
