#include "cfcdc/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "cfcdc/error.hpp"

namespace cfcdc::nn {

std::vector<GradProbe> gradient_check(const LossFn& loss, const std::vector<Parameter*>& params, int probes,
                                      std::uint64_t seed, double step, double floor) {
  if (params.empty()) throw InputError("gradient_check: no parameters");
  Gradients grads;
  {
    Graph g;
    g.backward(loss(g), grads);
  }
  auto eval = [&] {
    Graph g;
    return loss(g).scalar();
  };

  Index total = 0;
  for (auto* p : params) total += p->size();
  Rng rng(seed);
  std::vector<GradProbe> out;
  for (int k = 0; k < probes; ++k) {
    Index flat = static_cast<Index>(rng.below(static_cast<std::uint64_t>(total)));
    Parameter* p = params.front();
    for (auto* cand : params) {
      if (flat < cand->size()) {
        p = cand;
        break;
      }
      flat -= cand->size();
    }
    double& x = p->value().data()[flat];
    const double saved = x;
    x = saved + step;
    const double up = eval();
    x = saved - step;
    const double down = eval();
    x = saved;

    GradProbe probe;
    probe.param = p;
    probe.index = flat;
    const Matrix* g = grads.find(p);
    probe.analytic = g ? g->data()[flat] : 0.0;
    probe.numeric = (up - down) / (2.0 * step);
    probe.rel_error =
        std::fabs(probe.analytic - probe.numeric) / std::max(std::fabs(probe.analytic) + std::fabs(probe.numeric), floor);
    out.push_back(probe);
  }
  return out;
}

double max_rel_error(const std::vector<GradProbe>& probes) {
  double m = 0.0;
  for (const auto& p : probes) m = std::max(m, p.rel_error);
  return m;
}

}  // namespace cfcdc::nn
