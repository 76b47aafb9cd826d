#include "cfcdc/nn/layers.hpp"

#include <cmath>

namespace cfcdc::nn {

Matrix glorot(Index rows, Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * rng.uniform() - 1.0) * limit;
  return m;
}

Matrix gaussian(Index rows, Index cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, stddev);
  return m;
}

Linear::Linear(ParameterStore& store, const std::string& name, Index in, Index out, Rng& rng)
    : weight(&store.create(name + ".w", glorot(in, out, rng))),
      bias(&store.create(name + ".b", Matrix::Zero(1, out))) {}

Var Linear::operator()(Var x) const {
  Graph& g = *x.graph;
  return add_row(matmul(x, g.param(*weight)), g.param(*bias));
}

LayerNorm::LayerNorm(ParameterStore& store, const std::string& name, Index dim)
    : gamma(&store.create(name + ".gamma", Matrix::Ones(1, dim))),
      beta(&store.create(name + ".beta", Matrix::Zero(1, dim))) {}

Var LayerNorm::operator()(Var x) const {
  Graph& g = *x.graph;
  return layer_norm(x, g.param(*gamma), g.param(*beta));
}

}  // namespace cfcdc::nn
