#pragma once

#include <unordered_map>
#include <vector>

#include "cfcdc/nn/tensor.hpp"

namespace cfcdc::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;  // global gradient-norm clip; <= 0 disables
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig cfg);

  // Applies one update from `grads`; parameters without a gradient entry are
  // left untouched. Throws NumericError on a non-finite gradient.
  void step(const Gradients& grads);
  long steps() const { return t_; }

 private:
  struct Moments {
    Matrix m;
    Matrix v;
  };
  std::vector<Parameter*> params_;
  std::unordered_map<const Parameter*, Moments> state_;
  AdamConfig cfg_;
  long t_ = 0;
};

}  // namespace cfcdc::nn
