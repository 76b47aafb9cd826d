#pragma once

#include <string>

#include "cfcdc/nn/graph.hpp"

namespace cfcdc::nn {

// Scaled-uniform (Glorot) initialization.
Matrix glorot(Index rows, Index cols, Rng& rng);
Matrix gaussian(Index rows, Index cols, double stddev, Rng& rng);

// y = x W + b
struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, Index in, Index out, Rng& rng);

  Var operator()(Var x) const;
  Index in_dim() const { return weight->value().rows(); }
  Index out_dim() const { return weight->value().cols(); }
};

struct LayerNorm {
  Parameter* gamma = nullptr;
  Parameter* beta = nullptr;

  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& name, Index dim);

  Var operator()(Var x) const;
};

}  // namespace cfcdc::nn
