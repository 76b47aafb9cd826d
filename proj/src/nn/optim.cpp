#include "cfcdc/nn/optim.hpp"

#include <cmath>

#include "cfcdc/error.hpp"

namespace cfcdc::nn {

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  for (Parameter* p : params_) {
    state_.emplace(p, Moments{Matrix::Zero(p->value().rows(), p->value().cols()),
                              Matrix::Zero(p->value().rows(), p->value().cols())});
  }
}

void Adam::step(const Gradients& grads) {
  double norm2 = 0.0;
  for (Parameter* p : params_) {
    if (const Matrix* g = grads.find(p)) norm2 += g->squaredNorm();
  }
  if (!std::isfinite(norm2)) throw NumericError("non-finite gradient");
  double clip = 1.0;
  if (cfg_.clip_norm > 0.0 && std::sqrt(norm2) > cfg_.clip_norm) clip = cfg_.clip_norm / std::sqrt(norm2);

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Parameter* p : params_) {
    const Matrix* g = grads.find(p);
    if (g == nullptr) continue;
    Moments& s = state_.at(p);
    s.m = cfg_.beta1 * s.m + (1.0 - cfg_.beta1) * clip * *g;
    s.v = cfg_.beta2 * s.v + (1.0 - cfg_.beta2) * (clip * *g).cwiseAbs2();
    p->value().array() -=
        cfg_.learning_rate * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + cfg_.epsilon);
  }
}

}  // namespace cfcdc::nn
